#include "btai/env.hpp"

#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace btai {

namespace {

std::size_t sample(const Tensor& t, std::size_t offset, std::size_t stride, std::size_t count,
                   std::mt19937_64& rng) {
  std::vector<double> w(count);
  for (std::size_t i = 0; i < count; ++i) w[i] = t[offset + i * stride];
  std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
  return dist(rng);
}

struct Move {
  int dr, dc;
};
constexpr Move kMoves[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {0, 0}};

}  // namespace

PomdpEnv::PomdpEnv(Tensor A, Tensor B, Tensor D, std::vector<std::size_t> terminal)
    : A_(std::move(A)), B_(std::move(B)), D_(std::move(D)), terminal_(std::move(terminal)) {
  // Reuse the model's validation of shapes and stochasticity.
  spec_ = GenerativeModel::known(A_, B_, D_).spec();
  for (auto s : terminal_) {
    if (s >= spec_.n_states) throw std::out_of_range("terminal state out of range");
  }
}

std::size_t PomdpEnv::sample_obs(std::mt19937_64& rng) const {
  return sample(A_, state_, spec_.n_states, spec_.n_obs, rng);
}

std::size_t PomdpEnv::reset(std::mt19937_64& rng) {
  state_ = sample(D_, 0, 1, spec_.n_states, rng);
  return sample_obs(rng);
}

std::size_t PomdpEnv::step(Action action, std::mt19937_64& rng) {
  if (action >= spec_.n_actions) throw std::out_of_range("action out of range");
  // B is (next, state, action); entries of one (state, action) column are S*U apart.
  const std::size_t stride = spec_.n_states * spec_.n_actions;
  state_ = sample(B_, state_ * spec_.n_actions + action, stride, spec_.n_states, rng);
  return sample_obs(rng);
}

bool PomdpEnv::terminal() const {
  for (auto s : terminal_) {
    if (s == state_) return true;
  }
  return false;
}

MazeSpec MazeSpec::parse(std::string_view text) {
  MazeSpec m;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t starts = 0;
  std::size_t goals = 0;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty()) continue;
    if (m.cols == 0) m.cols = line.size();
    if (line.size() != m.cols) throw std::invalid_argument("maze rows differ in length");
    for (char ch : line) {
      switch (ch) {
        case '#': m.cells.push_back(Cell::wall); break;
        case '.': m.cells.push_back(Cell::free); break;
        case 'S': m.cells.push_back(Cell::start); ++starts; break;
        case 'G': m.cells.push_back(Cell::goal); ++goals; break;
        default: throw std::invalid_argument(std::string("unexpected maze character '") + ch + "'");
      }
    }
    ++m.rows;
  }
  if (m.rows == 0) throw std::invalid_argument("maze is empty");
  if (starts != 1 || goals != 1) throw std::invalid_argument("maze needs exactly one S and one G");
  return m;
}

MazeSpec MazeSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open maze file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::size_t MazeSpec::n_free() const {
  std::size_t n = 0;
  for (Cell c : cells) n += c != Cell::wall;
  return n;
}

std::size_t MazeSpec::state_of(std::size_t r, std::size_t c) const {
  if (r >= rows || c >= cols || at(r, c) == Cell::wall) throw std::out_of_range("not a free cell");
  std::size_t n = 0;
  for (std::size_t i = 0; i < r * cols + c; ++i) n += cells[i] != Cell::wall;
  return n;
}

std::size_t MazeSpec::start_state() const {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] == Cell::start) return state_of(i / cols, i % cols);
  }
  throw std::logic_error("maze has no start");
}

std::size_t MazeSpec::goal_state() const {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] == Cell::goal) return state_of(i / cols, i % cols);
  }
  throw std::logic_error("maze has no goal");
}

namespace {

// Cell reached from (r, c) by move m, staying put at walls and edges.
std::pair<std::size_t, std::size_t> moved(const MazeSpec& maze, std::size_t r, std::size_t c, Move m) {
  const long nr = long(r) + m.dr;
  const long nc = long(c) + m.dc;
  if (nr < 0 || nc < 0 || nr >= long(maze.rows) || nc >= long(maze.cols)) return {r, c};
  if (maze.at(std::size_t(nr), std::size_t(nc)) == Cell::wall) return {r, c};
  return {std::size_t(nr), std::size_t(nc)};
}

}  // namespace

MazeMatrices maze_to_matrices(const MazeSpec& maze, std::size_t n_actions) {
  if (n_actions != 4 && n_actions != 5) throw std::invalid_argument("mazes have 4 or 5 actions");
  if (!(maze.noise >= 0.0 && maze.noise < 1.0)) throw std::invalid_argument("noise must be in [0, 1)");
  const std::size_t n = maze.n_free();

  MazeMatrices out;
  const double hit = n == 1 ? 1.0 : 1.0 - maze.noise;
  const double miss = n == 1 ? 0.0 : maze.noise / double(n - 1);
  out.A = Tensor::filled({{std::string(axis::obs), n}, {std::string(axis::state), n}}, miss);
  for (std::size_t s = 0; s < n; ++s) out.A.at({s, s}) = hit;

  out.B = Tensor::zeros(
      {{std::string(axis::next), n}, {std::string(axis::state), n}, {std::string(axis::action), n_actions}});
  for (std::size_t r = 0; r < maze.rows; ++r) {
    for (std::size_t c = 0; c < maze.cols; ++c) {
      if (maze.at(r, c) == Cell::wall) continue;
      const std::size_t s = maze.state_of(r, c);
      for (std::size_t u = 0; u < n_actions; ++u) {
        const auto [nr, nc] = moved(maze, r, c, kMoves[u]);
        out.B.at({maze.state_of(nr, nc), s, u}) = 1.0;
      }
    }
  }

  out.start_state = maze.start_state();
  out.goal_state = maze.goal_state();
  out.D = Tensor::one_hot(axis::state, n, out.start_state);
  if (!shortest_path_length(maze)) out.warnings.push_back("goal is not reachable from start");
  return out;
}

std::optional<std::size_t> shortest_path_length(const MazeSpec& maze) {
  std::vector<long> dist(maze.cells.size(), -1);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < maze.cells.size(); ++i) {
    if (maze.cells[i] == Cell::start) {
      dist[i] = 0;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    if (maze.cells[i] == Cell::goal) return std::size_t(dist[i]);
    for (std::size_t m = 0; m < 4; ++m) {
      const auto [r, c] = moved(maze, i / maze.cols, i % maze.cols, kMoves[m]);
      const std::size_t j = r * maze.cols + c;
      if (dist[j] < 0) {
        dist[j] = dist[i] + 1;
        queue.push_back(j);
      }
    }
  }
  return std::nullopt;
}

MazeEnv::MazeEnv(const MazeSpec& maze, std::size_t n_actions) : MazeEnv(maze_to_matrices(maze, n_actions)) {}

MazeEnv::MazeEnv(MazeMatrices m)
    : PomdpEnv(std::move(m.A), std::move(m.B), std::move(m.D), {m.goal_state}) {}

}  // namespace btai
