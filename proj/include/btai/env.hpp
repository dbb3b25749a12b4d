#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "btai/model.hpp"

namespace btai {

class Environment {
 public:
  virtual ~Environment() = default;

  virtual ModelSpec spec() const = 0;
  virtual std::size_t reset(std::mt19937_64& rng) = 0;
  virtual std::size_t step(Action action, std::mt19937_64& rng) = 0;
  virtual bool terminal() const { return false; }
  virtual std::size_t hidden_state() const = 0;
};

/// World defined by true A, B, D matrices. States listed in `terminal`
/// end the episode when entered.
class PomdpEnv : public Environment {
 public:
  PomdpEnv(Tensor A, Tensor B, Tensor D, std::vector<std::size_t> terminal = {});

  ModelSpec spec() const override { return spec_; }
  std::size_t reset(std::mt19937_64& rng) override;
  std::size_t step(Action action, std::mt19937_64& rng) override;
  bool terminal() const override;
  std::size_t hidden_state() const override { return state_; }

 private:
  std::size_t sample_obs(std::mt19937_64& rng) const;

  ModelSpec spec_;
  Tensor A_, B_, D_;
  std::vector<std::size_t> terminal_;
  std::size_t state_ = 0;
};

enum class Cell { wall, free, start, goal };

/// Maze read from ASCII: '#' wall, '.' free, 'S' start, 'G' goal, one row per
/// line. States are the non-wall cells numbered in row-major order.
struct MazeSpec {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Cell> cells;
  double noise = 0.0;  // chance of reporting a random other cell

  static MazeSpec parse(std::string_view text);
  static MazeSpec load(const std::filesystem::path& path);

  Cell at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
  std::size_t n_free() const;
  /// State index of a non-wall cell.
  std::size_t state_of(std::size_t r, std::size_t c) const;
  std::size_t start_state() const;
  std::size_t goal_state() const;
};

struct MazeMatrices {
  Tensor A, B, D;
  std::size_t start_state = 0;
  std::size_t goal_state = 0;
  std::vector<std::string> warnings;
};

/// Actions are up, down, left, right and (with 5 actions) stay. Moves into
/// walls or off the grid leave the position unchanged.
MazeMatrices maze_to_matrices(const MazeSpec& maze, std::size_t n_actions = 5);

/// Fewest moves from start to goal, or nullopt when unreachable.
std::optional<std::size_t> shortest_path_length(const MazeSpec& maze);

/// Maze world; the goal cell is terminal.
class MazeEnv : public PomdpEnv {
 public:
  explicit MazeEnv(const MazeSpec& maze, std::size_t n_actions = 5);

 private:
  explicit MazeEnv(MazeMatrices m);
};

}  // namespace btai
