#include "btai/model.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace btai {

namespace {

std::vector<Axis> a_axes(const ModelSpec& s) {
  return {{std::string(axis::obs), s.n_obs}, {std::string(axis::state), s.n_states}};
}
std::vector<Axis> b_axes(const ModelSpec& s) {
  return {{std::string(axis::next), s.n_states},
          {std::string(axis::state), s.n_states},
          {std::string(axis::action), s.n_actions}};
}
std::vector<Axis> d_axes(const ModelSpec& s) { return {{std::string(axis::state), s.n_states}}; }

void require_shape(const Tensor& t, const std::vector<Axis>& axes, const char* what) {
  if (t.axes() != axes) throw std::invalid_argument(std::string("shape mismatch for ") + what);
}

Tensor log_clamped(const Tensor& t) {
  return map(t, [](double p) { return p > 0.0 ? std::log(p) : kLogZero; });
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_tensor(std::ostream& out, std::string_view label, const Tensor& t) {
  out << label << '\n';
  const std::size_t width = t.extent(t.rank() - 1);
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << format_double(t[i]) << ((i + 1) % width == 0 ? '\n' : ' ');
  }
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    while (in_ >> w) {
      if (w.front() == '#') {
        std::string rest;
        std::getline(in_, rest);
        continue;
      }
      return w;
    }
    throw std::runtime_error("model file ended unexpectedly");
  }

  void expect(std::string_view keyword) {
    const std::string w = word();
    if (w != keyword) {
      throw std::runtime_error("model file: expected '" + std::string(keyword) + "', got '" + w + "'");
    }
  }

  double number() {
    const std::string w = word();
    double x = 0.0;
    auto res = std::from_chars(w.data(), w.data() + w.size(), x);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size()) {
      throw std::runtime_error("model file: bad number '" + w + "'");
    }
    return x;
  }

  std::size_t count() {
    const double x = number();
    if (x < 1 || x != std::floor(x)) throw std::runtime_error("model file: bad size");
    return static_cast<std::size_t>(x);
  }

  Tensor tensor(std::string_view label, std::vector<Axis> axes) {
    expect(label);
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size;
    std::vector<double> data(n);
    for (double& x : data) x = number();
    return Tensor(std::move(axes), std::move(data));
  }

 private:
  std::istream& in_;
};

}  // namespace

void ModelSpec::validate() const {
  if (n_states < 1 || n_obs < 1 || n_actions < 1) {
    throw std::invalid_argument("model sizes must all be >= 1");
  }
}

bool is_stochastic(const Tensor& t, std::string_view axis_name, double tol) {
  for (double x : t.values()) {
    if (!(x >= 0.0)) return false;
  }
  try {
    // Normalising a stochastic tensor leaves it unchanged.
    const Tensor n = normalize_along(t, axis_name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (std::abs(n[i] - t[i]) > tol) return false;
    }
  } catch (const std::invalid_argument&) {
    return false;
  }
  return true;
}

GenerativeModel GenerativeModel::with_priors(ModelSpec spec, Tensor a, Tensor b, Tensor d,
                                             double theta_concentration) {
  spec.validate();
  require_shape(a, a_axes(spec), "a");
  require_shape(b, b_axes(spec), "b");
  require_shape(d, d_axes(spec), "d");
  if (!(theta_concentration > 0.0)) throw std::invalid_argument("theta concentration must be > 0");
  GenerativeModel m;
  m.spec_ = spec;
  m.learning_ = true;
  m.theta_concentration_ = theta_concentration;
  m.a_ = Dirichlet(std::move(a), std::string(axis::obs));
  m.b_ = Dirichlet(std::move(b), std::string(axis::next));
  m.d_ = Dirichlet(std::move(d), std::string(axis::state));
  m.a_hat_ = m.a_;
  m.b_hat_ = m.b_;
  m.d_hat_ = m.d_;
  m.refresh();
  return m;
}

GenerativeModel GenerativeModel::with_priors(ModelSpec spec, PriorConcentrations conc) {
  spec.validate();
  return with_priors(spec, Tensor::filled(a_axes(spec), conc.a), Tensor::filled(b_axes(spec), conc.b),
                     Tensor::filled(d_axes(spec), conc.d), conc.theta);
}

GenerativeModel GenerativeModel::known(Tensor A, Tensor B, Tensor D, double theta_concentration) {
  if (A.rank() != 2 || B.rank() != 3 || D.rank() != 1) {
    throw std::invalid_argument("known matrices have the wrong rank");
  }
  ModelSpec spec{D.size(), A.extent(0), B.extent(2)};
  spec.validate();
  require_shape(A, a_axes(spec), "A");
  require_shape(B, b_axes(spec), "B");
  require_shape(D, d_axes(spec), "D");
  if (!is_stochastic(A, axis::obs)) throw std::invalid_argument("A is not stochastic");
  if (!is_stochastic(B, axis::next)) throw std::invalid_argument("B is not stochastic");
  if (!is_stochastic(D, axis::state)) throw std::invalid_argument("D is not stochastic");
  if (!(theta_concentration > 0.0)) throw std::invalid_argument("theta concentration must be > 0");

  GenerativeModel m;
  m.spec_ = spec;
  m.learning_ = false;
  m.theta_concentration_ = theta_concentration;
  m.A_log_ = log_clamped(A);
  m.B_log_ = log_clamped(B);
  m.D_log_ = log_clamped(D);
  m.A_mean_ = std::move(A);
  m.B_mean_ = std::move(B);
  m.D_mean_ = std::move(D);
  return m;
}

void GenerativeModel::refresh() {
  if (!learning_) return;
  A_mean_ = expected_value(a_hat_);
  A_log_ = expected_log(a_hat_);
  B_mean_ = expected_value(b_hat_);
  B_log_ = expected_log(b_hat_);
  D_mean_ = expected_value(d_hat_);
  D_log_ = expected_log(d_hat_);
}

Dirichlet GenerativeModel::default_theta_prior() const {
  return Dirichlet(Tensor::filled({{std::string(axis::action), spec_.n_actions}}, theta_concentration_),
                   std::string(axis::action));
}

Tensor GenerativeModel::theta_log(std::size_t tau) const {
  if (tau < theta_hat_.size()) return expected_log(theta_hat_[tau]);
  return expected_log(default_theta_prior());
}

void GenerativeModel::ensure_theta(std::size_t count) {
  while (theta_.size() < count) {
    theta_.push_back(default_theta_prior());
    theta_hat_.push_back(theta_.back());
  }
}

void GenerativeModel::set_posteriors(Dirichlet a_hat, Dirichlet b_hat, Dirichlet d_hat,
                                     std::vector<Dirichlet> theta_hat) {
  if (!learning_) throw std::logic_error("posteriors are fixed in known-matrix mode");
  require_shape(a_hat.concentrations(), a_axes(spec_), "a_hat");
  require_shape(b_hat.concentrations(), b_axes(spec_), "b_hat");
  require_shape(d_hat.concentrations(), d_axes(spec_), "d_hat");
  ensure_theta(theta_hat.size());
  a_hat_ = std::move(a_hat);
  b_hat_ = std::move(b_hat);
  d_hat_ = std::move(d_hat);
  for (std::size_t i = 0; i < theta_hat.size(); ++i) theta_hat_[i] = std::move(theta_hat[i]);
  refresh();
}

void GenerativeModel::carry_posteriors_to_priors() {
  if (!learning_) return;
  a_ = a_hat_;
  b_ = b_hat_;
  d_ = d_hat_;
  // Action priors are per time step of a trial and start afresh.
  theta_.clear();
  theta_hat_.clear();
}

Target Target::uniform(const ModelSpec& spec) {
  return {Categorical::uniform(axis::obs, spec.n_obs), Categorical::uniform(axis::state, spec.n_states)};
}

Target Target::goal(const ModelSpec& spec, std::size_t goal_obs, std::size_t goal_state) {
  return {Categorical::one_hot(axis::obs, spec.n_obs, goal_obs),
          Categorical::one_hot(axis::state, spec.n_states, goal_state)};
}

PastBeliefs PastBeliefs::start(const ModelSpec& spec, std::size_t first_obs) {
  if (first_obs >= spec.n_obs) throw std::out_of_range("observation out of range");
  PastBeliefs p;
  p.states.push_back(Categorical::uniform(axis::state, spec.n_states));
  p.observations.push_back(first_obs);
  return p;
}

void PastBeliefs::extend(const ModelSpec& spec, std::size_t obs) {
  if (obs >= spec.n_obs) throw std::out_of_range("observation out of range");
  actions.push_back(Categorical::uniform(axis::action, spec.n_actions));
  states.push_back(Categorical::uniform(axis::state, spec.n_states));
  observations.push_back(obs);
}

Tensor PastBeliefs::observation_vector(std::size_t tau, std::size_t n_obs) const {
  return Tensor::one_hot(axis::obs, n_obs, observations.at(tau));
}

void PastBeliefs::validate(const ModelSpec& spec) const {
  if (states.empty()) throw std::invalid_argument("past beliefs need at least one state");
  if (actions.size() + 1 != states.size() || observations.size() != states.size()) {
    throw std::invalid_argument("past beliefs have inconsistent lengths");
  }
  for (const auto& s : states) {
    if (s.size() != spec.n_states) throw std::invalid_argument("state belief has the wrong size");
  }
  for (const auto& a : actions) {
    if (a.size() != spec.n_actions) throw std::invalid_argument("action belief has the wrong size");
  }
  for (auto o : observations) {
    if (o >= spec.n_obs) throw std::invalid_argument("observation out of range");
  }
}

// Format:
//   btai-model 1
//   states S observations O actions U
//   known | dirichlet
//   known:      A, B, D tensors
//   dirichlet:  theta <c>, then a, b, d, a_hat, b_hat, d_hat tensors
// Each tensor is a label line followed by its values in row-major order
// (A: obs x state, B: next x state x action, D: state).
void save_model(std::ostream& out, const GenerativeModel& model) {
  const ModelSpec& s = model.spec();
  out << "btai-model 1\n";
  out << "states " << s.n_states << " observations " << s.n_obs << " actions " << s.n_actions << '\n';
  if (!model.learning()) {
    out << "known\n";
    write_tensor(out, "A", model.A_mean());
    write_tensor(out, "B", model.B_mean());
    write_tensor(out, "D", model.D_mean());
    return;
  }
  out << "dirichlet\n";
  out << "theta " << format_double(model.default_theta_prior().concentrations()[0]) << '\n';
  write_tensor(out, "a", model.a_prior().concentrations());
  write_tensor(out, "b", model.b_prior().concentrations());
  write_tensor(out, "d", model.d_prior().concentrations());
  write_tensor(out, "a_hat", model.a_posterior().concentrations());
  write_tensor(out, "b_hat", model.b_posterior().concentrations());
  write_tensor(out, "d_hat", model.d_posterior().concentrations());
}

GenerativeModel load_model(std::istream& in) {
  Reader r(in);
  r.expect("btai-model");
  if (r.number() != 1) throw std::runtime_error("unsupported model file version");
  ModelSpec s;
  r.expect("states");
  s.n_states = r.count();
  r.expect("observations");
  s.n_obs = r.count();
  r.expect("actions");
  s.n_actions = r.count();

  const std::string kind = r.word();
  if (kind == "known") {
    Tensor A = r.tensor("A", a_axes(s));
    Tensor B = r.tensor("B", b_axes(s));
    Tensor D = r.tensor("D", d_axes(s));
    return GenerativeModel::known(std::move(A), std::move(B), std::move(D));
  }
  if (kind != "dirichlet") throw std::runtime_error("unknown model kind '" + kind + "'");
  r.expect("theta");
  const double theta = r.number();
  Tensor a = r.tensor("a", a_axes(s));
  Tensor b = r.tensor("b", b_axes(s));
  Tensor d = r.tensor("d", d_axes(s));
  GenerativeModel m = GenerativeModel::with_priors(s, std::move(a), std::move(b), std::move(d), theta);
  Tensor a_hat = r.tensor("a_hat", a_axes(s));
  Tensor b_hat = r.tensor("b_hat", b_axes(s));
  Tensor d_hat = r.tensor("d_hat", d_axes(s));
  m.set_posteriors(Dirichlet(std::move(a_hat), std::string(axis::obs)),
                   Dirichlet(std::move(b_hat), std::string(axis::next)),
                   Dirichlet(std::move(d_hat), std::string(axis::state)), {});
  return m;
}

}  // namespace btai
