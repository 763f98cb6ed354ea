#include "tempo/kahler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>

#include "tempo/clockwork.hpp"
#include "tempo/errors.hpp"

namespace tempo::kahler {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kHorizontalTol = 1e-12;
constexpr double kBaseTol = 1e-12;

void require_square(const CMat& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << ": expected a nonempty square matrix, got " << m.rows() << "x"
       << m.cols();
    throw DimensionMismatch(os.str());
  }
}

void require_hermitian(const CMat& m, const char* what) {
  require_square(m, what);
  const double residual = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (!(residual <= kHermitianTol)) {
    std::ostringstream os;
    os << what << ": Hermiticity residual " << residual << " exceeds "
       << kHermitianTol;
    throw ConfigError(os.str());
  }
}

void require_dim(int expected, int got, const char* what) {
  if (expected != got) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << expected << " vs " << got << ")";
    throw DimensionMismatch(os.str());
  }
}

int largest_component(const CVec& v) {
  int best = 0;
  double best_mod = std::norm(v[0]);
  for (int i = 1; i < v.size(); ++i) {
    const double mod = std::norm(v[i]);
    if (mod > best_mod) {
      best_mod = mod;
      best = i;
    }
  }
  return best;
}

// Expectations <F_j> with the normalization carried explicitly, so both
// value() and field() are invariant under psi -> c psi.
Vec normalized_expectations(const std::vector<CMat>& mats, const CVec& psi) {
  const double nsq = psi.squaredNorm();
  Vec e(static_cast<int>(mats.size()));
  for (std::size_t j = 0; j < mats.size(); ++j) {
    e[static_cast<int>(j)] = psi.dot(mats[j] * psi).real() / nsq;
  }
  return e;
}

CVec random_complex(int n, Rng& rng) {
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = Complex(rng.normal(), rng.normal());
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// QuantumSystem.

QuantumSystem::QuantumSystem(int dim_in, CMat hamiltonian_in)
    : dim(dim_in), hamiltonian(std::move(hamiltonian_in)) {
  require_hermitian(hamiltonian, "QuantumSystem");
  require_dim(dim, static_cast<int>(hamiltonian.rows()), "QuantumSystem");
  if (dim < 2) throw ConfigError("QuantumSystem: dimension must be at least 2");
}

QuantumSystem quantum_system_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("dim") || !doc.contains("matrix")) {
    throw ConfigError(
        "quantum system document must be an object with \"dim\" and \"matrix\"");
  }
  const int n = doc.at("dim").get<int>();
  if (n < 2) throw ConfigError("quantum system: \"dim\" must be at least 2");
  const auto& entries = doc.at("matrix");
  if (!entries.is_array() ||
      entries.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    std::ostringstream os;
    os << "quantum system: \"matrix\" must be a row-major array of " << n * n
       << " [re, im] pairs";
    throw ConfigError(os.str());
  }
  CMat H(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const auto& cell = entries.at(static_cast<std::size_t>(r * n + c));
      if (!cell.is_array() || cell.size() != 2) {
        throw ConfigError("quantum system: each matrix entry must be [re, im]");
      }
      H(r, c) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
  }
  return QuantumSystem(n, std::move(H));
}

// ---------------------------------------------------------------------------
// Points and tangents.

ProjectivePoint ProjectivePoint::from(const CVec& raw) {
  const double norm = raw.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DomainError("ProjectivePoint: cannot project a zero or non-finite vector");
  }
  CVec v = raw / norm;
  const int k = largest_component(v);
  const double mod = std::abs(v[k]);
  v *= std::conj(v[k]) / mod;
  v[k] = Complex(mod, 0.0);  // scrub residual imaginary dust exactly
  return ProjectivePoint(std::move(v));
}

double projective_distance(const CVec& a, const CVec& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("projective_distance: dimension mismatch");
  }
  const Complex overlap = b.dot(a);  // <b, a>
  const double mod = std::abs(overlap);
  if (mod == 0.0) return std::sqrt(a.squaredNorm() + b.squaredNorm());
  return (a - (overlap / mod) * b).norm();
}

double projective_distance(const ProjectivePoint& a, const ProjectivePoint& b) {
  return projective_distance(a.representative(), b.representative());
}

ProjectiveTangent::ProjectiveTangent(ProjectivePoint base, CVec vector)
    : base_(std::move(base)), vec_(std::move(vector)) {
  require_dim(base_.dim(), static_cast<int>(vec_.size()), "ProjectiveTangent");
  const double overlap = std::abs(base_.representative().dot(vec_));
  if (!(overlap <= kHorizontalTol * std::max(1.0, vec_.norm()))) {
    std::ostringstream os;
    os << "ProjectiveTangent: vector is not horizontal (|<base, v>| = " << overlap
       << ")";
    throw ValidationFailed(os.str());
  }
}

ProjectiveTangent ProjectiveTangent::horizontal(const ProjectivePoint& base,
                                                const CVec& raw) {
  require_dim(base.dim(), static_cast<int>(raw.size()), "ProjectiveTangent");
  const CVec& b = base.representative();
  return ProjectiveTangent(base, raw - b.dot(raw) * b);
}

ProjectiveTangent ProjectiveTangent::j() const {
  return ProjectiveTangent(base_, Complex(0.0, 1.0) * vec_);
}

// ---------------------------------------------------------------------------
// Observable functions.

ObservableFunction ObservableFunction::expectation(CMat F, std::string label) {
  require_hermitian(F, "ObservableFunction::expectation");
  ObservableFunction f;
  f.kind_ = Kind::Expectation;
  f.dim_ = static_cast<int>(F.rows());
  f.mats_.push_back(std::move(F));
  f.value_ = [](const Vec& e) { return e[0]; };
  f.grad_ = [](const Vec&) { return Vec::Ones(1); };
  f.label_ = std::move(label);
  return f;
}

ObservableFunction ObservableFunction::weinberg(
    std::vector<CMat> matrices, std::function<double(const Vec&)> value,
    std::function<Vec(const Vec&)> gradient, std::string label) {
  if (matrices.empty()) {
    throw ConfigError("ObservableFunction::weinberg: needs at least one matrix");
  }
  if (!value || !gradient) {
    throw ConfigError("ObservableFunction::weinberg: value and gradient required");
  }
  const int n = static_cast<int>(matrices.front().rows());
  for (const CMat& m : matrices) {
    require_hermitian(m, "ObservableFunction::weinberg");
    require_dim(n, static_cast<int>(m.rows()), "ObservableFunction::weinberg");
  }
  ObservableFunction f;
  f.kind_ = Kind::Weinberg;
  f.dim_ = n;
  f.mats_ = std::move(matrices);
  f.value_ = std::move(value);
  f.grad_ = std::move(gradient);
  f.label_ = std::move(label);
  return f;
}

ObservableFunction ObservableFunction::weinberg_square(CMat F, std::string label) {
  std::vector<CMat> mats;
  mats.push_back(std::move(F));
  return weinberg(
      std::move(mats), [](const Vec& e) { return e[0] * e[0]; },
      [](const Vec& e) {
        Vec g(1);
        g[0] = 2.0 * e[0];
        return g;
      },
      std::move(label));
}

ObservableFunction ObservableFunction::weinberg_product(CMat F, CMat G,
                                                        std::string label) {
  std::vector<CMat> mats;
  mats.push_back(std::move(F));
  mats.push_back(std::move(G));
  return weinberg(
      std::move(mats), [](const Vec& e) { return e[0] * e[1]; },
      [](const Vec& e) {
        Vec g(2);
        g[0] = e[1];
        g[1] = e[0];
        return g;
      },
      std::move(label));
}

const CMat& ObservableFunction::matrix() const {
  if (kind_ != Kind::Expectation) {
    throw KindMismatch("ObservableFunction::matrix: not an expectation function");
  }
  return mats_.front();
}

double ObservableFunction::value(const CVec& psi) const {
  require_dim(dim_, static_cast<int>(psi.size()), "ObservableFunction::value");
  return value_(normalized_expectations(mats_, psi));
}

Vec ObservableFunction::weights(const CVec& psi) const {
  require_dim(dim_, static_cast<int>(psi.size()), "ObservableFunction::weights");
  return grad_(normalized_expectations(mats_, psi));
}

CVec ObservableFunction::field(const CVec& psi) const {
  require_dim(dim_, static_cast<int>(psi.size()), "ObservableFunction::field");
  const Vec e = normalized_expectations(mats_, psi);
  const Vec w = grad_(e);
  CVec acc = CVec::Zero(psi.size());
  for (std::size_t j = 0; j < mats_.size(); ++j) {
    const double wj = w[static_cast<int>(j)];
    if (wj == 0.0) continue;
    acc += wj * (mats_[j] * psi - e[static_cast<int>(j)] * psi);
  }
  return Complex(0.0, -1.0) * acc;
}

// ---------------------------------------------------------------------------
// Core operations.

std::pair<double, double> kahler_forms(const ProjectiveTangent& X,
                                       const ProjectiveTangent& Y) {
  const CVec& a = X.base().representative();
  const CVec& b = Y.base().representative();
  if (a.size() != b.size() || (a - b).norm() > kBaseTol) {
    throw BaseMismatch("kahler_forms: tangents live at different base points");
  }
  const Complex ip = X.vector().dot(Y.vector());
  return {ip.real(), ip.imag()};
}

double expectation_value(const ObservableFunction& obs, const ProjectivePoint& psi) {
  return obs.value(psi.representative());
}

CVec unrealify(const Vec& y) {
  const int n = static_cast<int>(y.size()) / 2;
  CVec psi(n);
  for (int i = 0; i < n; ++i) psi[i] = Complex(y[i], y[n + i]);
  return psi;
}

Vec realify(const CVec& psi) {
  const int n = static_cast<int>(psi.size());
  Vec y(2 * n);
  for (int i = 0; i < n; ++i) {
    y[i] = psi[i].real();
    y[n + i] = psi[i].imag();
  }
  return y;
}

namespace {

// Realified ODE for X_f.  The right-hand side is homogeneous of degree 1 and
// phase-equivariant, so trajectories of representatives project correctly
// whether or not they are snapped back to canonical form.
flow::OdeSystem observable_ode(const ObservableFunction& obs, bool snap) {
  flow::OdeSystem ode;
  ode.dim = 2 * obs.dim();
  ode.rhs = [&obs](const Vec& y) { return realify(obs.field(unrealify(y))); };
  if (snap) {
    ode.snap = [](Vec& y) {
      y = realify(ProjectivePoint::from(unrealify(y)).representative());
    };
  }
  return ode;
}

void require_obs_dim(const QuantumSystem& system, const ObservableFunction& obs) {
  require_dim(system.dim, obs.dim(), "observable");
}

}  // namespace

std::pair<flow::Trajectory, flow::FlowOutcome> projective_flow(
    const QuantumSystem& system, const ObservableFunction& obs,
    const ProjectivePoint& psi0, std::pair<double, double> span,
    const flow::IntegratorConfig& config) {
  require_obs_dim(system, obs);
  require_dim(system.dim, psi0.dim(), "projective_flow state");
  const flow::OdeSystem ode = observable_ode(obs, /*snap=*/true);
  return flow::integrate_ode(ode, realify(psi0.representative()), span, config,
                             obs.label());
}

ProjectiveSampledFlow projective_flow_sampled(const QuantumSystem& system,
                                              const ObservableFunction& obs,
                                              const ProjectivePoint& psi0,
                                              const std::vector<double>& grid,
                                              const flow::IntegratorConfig& config) {
  require_obs_dim(system, obs);
  require_dim(system.dim, psi0.dim(), "projective_flow_sampled state");
  const flow::OdeSystem ode = observable_ode(obs, /*snap=*/true);
  flow::SampledFlow raw =
      flow::integrate_sampled_ode(ode, realify(psi0.representative()), grid, config);
  ProjectiveSampledFlow out;
  out.parameters = std::move(raw.parameters);
  out.outcome = std::move(raw.outcome);
  out.states.reserve(raw.states.size());
  for (const Vec& y : raw.states) {
    out.states.push_back(ProjectivePoint::from(unrealify(y)));
  }
  return out;
}

CVec evolve_exact(const CMat& F, const CVec& psi, double s) {
  require_hermitian(F, "evolve_exact");
  require_dim(static_cast<int>(F.rows()), static_cast<int>(psi.size()),
              "evolve_exact");
  Eigen::SelfAdjointEigenSolver<CMat> solver(F);
  if (solver.info() != Eigen::Success) {
    throw ValidationFailed("evolve_exact: eigendecomposition failed");
  }
  const CMat& U = solver.eigenvectors();
  const Vec& lambda = solver.eigenvalues();
  CVec coeffs = U.adjoint() * psi;
  for (int i = 0; i < coeffs.size(); ++i) {
    coeffs[i] *= std::exp(Complex(0.0, -s * lambda[i]));
  }
  return U * coeffs;
}

double killing_residual(const ObservableFunction& obs, const ProjectivePoint& psi,
                        int tangent_samples, double delta, std::uint64_t seed,
                        double fd_eps) {
  require_dim(obs.dim(), psi.dim(), "killing_residual state");
  if (tangent_samples < 1) {
    throw ConfigError("killing_residual: tangent_samples must be positive");
  }
  if (!(delta > 0.0) || !(fd_eps > 0.0)) {
    throw ConfigError("killing_residual: delta and fd_eps must be positive");
  }

  // No snapping: the differenced initial conditions must follow the smooth
  // homogeneous flow, and the tiny span keeps representatives near unit norm
  // anyway.  Tolerances are tightened because the differential is resolved
  // from O(fd_eps) state differences.
  flow::IntegratorConfig cfg;
  cfg.rel_tol = 1e-13;
  cfg.abs_tol = 1e-14;
  const flow::OdeSystem ode = observable_ode(obs, /*snap=*/false);

  const auto flow_map = [&](const CVec& u) -> CVec {
    const std::vector<double> grid = {0.0, delta};
    flow::SampledFlow f = flow::integrate_sampled_ode(ode, realify(u), grid, cfg);
    if (f.outcome.verdict != flow::Verdict::Completed || f.states.size() != 2) {
      throw ValidationFailed("killing_residual: transport flow did not complete");
    }
    return unrealify(f.states.back());
  };

  const CVec& base = psi.representative();
  const CVec end_raw = flow_map(base);
  const CVec end_unit = end_raw / end_raw.norm();
  const auto transport = [&](const CVec& v) -> CVec {
    const CVec plus = flow_map(base + fd_eps * v);
    const CVec minus = flow_map(base - fd_eps * v);
    CVec d = (plus - minus) / (2.0 * fd_eps);
    d -= end_unit.dot(d) * end_unit;  // horizontal part at the endpoint
    return d;
  };

  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < tangent_samples; ++k) {
    CVec X = ProjectiveTangent::horizontal(psi, random_complex(psi.dim(), rng)).vector();
    CVec Y = ProjectiveTangent::horizontal(psi, random_complex(psi.dim(), rng)).vector();
    if (X.norm() < 1e-8 || Y.norm() < 1e-8) {
      --k;  // razor-thin chance with Gaussian draws; resample
      continue;
    }
    X /= X.norm();
    Y /= Y.norm();
    const double before = X.dot(Y).real();
    const double after = transport(X).dot(transport(Y)).real();
    worst = std::max(worst, std::abs(after - before) / delta);
  }
  return worst;
}

double killing_norm_constancy(const ObservableFunction& obs,
                              const ProjectivePoint& psi0,
                              const std::vector<double>& s_grid,
                              const flow::IntegratorConfig& config,
                              bool allow_weinberg) {
  if (obs.kind() == ObservableFunction::Kind::Weinberg && !allow_weinberg) {
    throw KindMismatch(
        "killing_norm_constancy: Weinberg function (pass allow_weinberg to "
        "inspect its drift anyway)");
  }
  require_dim(obs.dim(), psi0.dim(), "killing_norm_constancy state");
  const flow::OdeSystem ode = observable_ode(obs, /*snap=*/true);
  const flow::SampledFlow f =
      flow::integrate_sampled_ode(ode, realify(psi0.representative()), s_grid, config);
  if (f.outcome.verdict != flow::Verdict::Completed) {
    throw ValidationFailed("killing_norm_constancy: flow did not complete");
  }
  double base = 0.0;
  double drift = 0.0;
  for (std::size_t i = 0; i < f.states.size(); ++i) {
    const CVec psi = unrealify(f.states[i]);
    const double norm_sq = obs.field(psi).squaredNorm() / psi.squaredNorm();
    if (i == 0) {
      base = norm_sq;
    } else {
      drift = std::max(drift, std::abs(norm_sq - base));
    }
  }
  return drift;
}

// ---------------------------------------------------------------------------
// Charts.

Chart chart_at(const ProjectivePoint& psi) {
  return Chart{psi.dim(), largest_component(psi.representative())};
}

bool chart_contains(const Chart& chart, const Vec& u) {
  if (u.size() != 2 * (chart.n - 1)) return false;
  return u.squaredNorm() < 1.0 - 1.0 / (2.0 * chart.n);
}

CVec chart_embed(const Chart& chart, const Vec& u) {
  const int m = chart.n - 1;
  if (u.size() != 2 * m) {
    throw DimensionMismatch("chart_embed: coordinate dimension mismatch");
  }
  // sqrt of a negative argument yields NaN, which downstream numerics treat
  // as an off-domain sample; chart_contains is the authoritative predicate.
  const double s = std::sqrt(1.0 - u.squaredNorm());
  CVec psi(chart.n);
  int off = 0;
  for (int i = 0; i < chart.n; ++i) {
    if (i == chart.fixed_index) {
      psi[i] = Complex(s, 0.0);
    } else {
      psi[i] = Complex(u[off], u[m + off]);
      ++off;
    }
  }
  return psi;
}

Vec chart_coords(const Chart& chart, const CVec& psi) {
  require_dim(chart.n, static_cast<int>(psi.size()), "chart_coords");
  const Complex zk = psi[chart.fixed_index];
  if (std::abs(zk) == 0.0) {
    throw DomainError("chart_coords: state lies outside the chart");
  }
  CVec w = psi * (std::conj(zk) / std::abs(zk));
  w /= w.norm();
  const int m = chart.n - 1;
  Vec u(2 * m);
  int off = 0;
  for (int i = 0; i < chart.n; ++i) {
    if (i == chart.fixed_index) continue;
    u[off] = w[i].real();
    u[m + off] = w[i].imag();
    ++off;
  }
  return u;
}

geometry::ScalarField chart_field(const Chart& chart, const ObservableFunction& obs) {
  require_dim(chart.n, obs.dim(), "chart_field");
  const Chart c = chart;
  // Copied into the closures: callers may pass temporaries (chart_system does).
  const ObservableFunction fn = obs;
  auto evaluator = [c, fn](const Vec& u) { return fn.value(chart_embed(c, u)); };
  // The embedding keeps psi(u) exactly unit, so e_j(u) = <psi, F_j psi> and
  //   d f / d x_m = 2 (Re G_m - (x_m / s) Re G_k),
  //   d f / d y_m = 2 (Im G_m - (y_m / s) Re G_k),
  // with G = sum_j w_j F_j psi and s the fixed (real) component: moving a
  // chart coordinate moves the fixed component by -x_m/s (resp. -y_m/s), and
  // f varies as 2 Re <G, d psi>.
  auto grad = [c, fn](const Vec& u) -> Vec {
    const CVec psi = chart_embed(c, u);
    const Vec w = fn.weights(psi);
    const auto& mats = fn.matrices();
    CVec G = CVec::Zero(c.n);
    for (std::size_t j = 0; j < mats.size(); ++j) {
      const double wj = w[static_cast<int>(j)];
      if (wj != 0.0) G += wj * (mats[j] * psi);
    }
    const double s = psi[c.fixed_index].real();
    const double gk = G[c.fixed_index].real();
    const int m = c.n - 1;
    Vec out(2 * m);
    int off = 0;
    for (int i = 0; i < c.n; ++i) {
      if (i == c.fixed_index) continue;
      out[off] = 2.0 * (G[i].real() - u[off] / s * gk);
      out[m + off] = 2.0 * (G[i].imag() - u[m + off] / s * gk);
      ++off;
    }
    return out;
  };
  return geometry::ScalarField(std::move(evaluator), std::move(grad), fn.label());
}

geometry::DynamicalSystem chart_system(const QuantumSystem& system,
                                       const Chart& chart) {
  require_dim(system.dim, chart.n, "chart_system");
  const int m = chart.n - 1;
  std::vector<std::string> names;
  names.reserve(2 * m);
  for (int i = 1; i <= m; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= m; ++i) names.push_back("y" + std::to_string(i));
  const Chart c = chart;
  geometry::PhaseSpace space(2 * m, std::move(names),
                             [c](const Vec& u) { return chart_contains(c, u); });
  geometry::SymplecticForm form = geometry::SymplecticForm::scaled_canonical(2 * m, 2.0);
  return geometry::DynamicalSystem(std::move(space), std::move(form),
                                   chart_field(chart, ObservableFunction::expectation(
                                                          system.hamiltonian, "h")));
}

// ---------------------------------------------------------------------------
// Candidate families and sampling.

std::vector<CMat> pauli_like_basis(int n) {
  if (n < 2) throw ConfigError("pauli_like_basis: dimension must be at least 2");
  std::vector<CMat> basis;
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      CMat sym = CMat::Zero(n, n);
      sym(j, k) = Complex(1.0, 0.0);
      sym(k, j) = Complex(1.0, 0.0);
      basis.push_back(std::move(sym));
      CMat asym = CMat::Zero(n, n);
      asym(j, k) = Complex(0.0, -1.0);
      asym(k, j) = Complex(0.0, 1.0);
      basis.push_back(std::move(asym));
    }
  }
  for (int l = 1; l < n; ++l) {
    CMat diag = CMat::Zero(n, n);
    const double scale = std::sqrt(2.0 / (static_cast<double>(l) * (l + 1)));
    for (int i = 0; i < l; ++i) diag(i, i) = Complex(scale, 0.0);
    diag(l, l) = Complex(-scale * l, 0.0);
    basis.push_back(std::move(diag));
  }
  return basis;
}

CMat random_hermitian(int n, Rng& rng) {
  CMat a(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a(r, c) = Complex(rng.normal(), rng.normal());
  }
  return 0.5 * (a + CMat(a.adjoint()));
}

ProjectivePoint random_state(int n, Rng& rng) {
  return ProjectivePoint::from(random_complex(n, rng));
}

// ---------------------------------------------------------------------------
// Identity battery.

double IdentityResiduals::max() const {
  return std::max({compatibility, j_invariance_g, j_invariance_omega,
                   phase_invariance});
}

IdentityResiduals kahler_identity_residuals(int dim, int samples,
                                            std::uint64_t seed) {
  if (dim < 2) throw ConfigError("kahler_identity_residuals: dim must be >= 2");
  if (samples < 1) throw ConfigError("kahler_identity_residuals: samples must be >= 1");
  Rng rng(seed);
  IdentityResiduals out;
  for (int k = 0; k < samples; ++k) {
    const ProjectivePoint p = random_state(dim, rng);
    auto draw_unit_tangent = [&]() {
      CVec v = ProjectiveTangent::horizontal(p, random_complex(dim, rng)).vector();
      return ProjectiveTangent(p, v / v.norm());
    };
    const ProjectiveTangent X = draw_unit_tangent();
    const ProjectiveTangent Y = draw_unit_tangent();
    const auto [g, omega] = kahler_forms(X, Y);
    const auto [gj, omegaj] = kahler_forms(X.j(), Y.j());
    const double omega_x_jy = kahler_forms(X, Y.j()).second;
    out.compatibility = std::max(out.compatibility, std::abs(g - omega_x_jy));
    out.j_invariance_g = std::max(out.j_invariance_g, std::abs(gj - g));
    out.j_invariance_omega = std::max(out.j_invariance_omega, std::abs(omegaj - omega));

    // Phase invariance: the canonical representative and expectation values
    // must ignore an overall phase on the raw vector.
    const CVec raw = random_complex(dim, rng);
    const double theta = rng.uniform(0.0, 6.283185307179586);
    const ProjectivePoint p1 = ProjectivePoint::from(raw);
    const ProjectivePoint p2 =
        ProjectivePoint::from(std::exp(Complex(0.0, theta)) * raw);
    const ObservableFunction f =
        ObservableFunction::expectation(random_hermitian(dim, rng));
    const double rep_gap = (p1.representative() - p2.representative()).norm();
    const double val_gap = std::abs(expectation_value(f, p1) - expectation_value(f, p2));
    out.phase_invariance = std::max({out.phase_invariance, rep_gap, val_gap});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Obstruction demo.

PauliDemoReport pauli_obstruction_demo(const QuantumSystem& system,
                                       const std::vector<ObservableFunction>& candidates,
                                       double tol,
                                       const PauliDemoConfig& config) {
  if (candidates.empty()) {
    throw ConfigError("pauli_obstruction_demo: needs at least one candidate");
  }
  for (const ObservableFunction& c : candidates) {
    require_obs_dim(system, c);
    if (c.kind() != ObservableFunction::Kind::Expectation) {
      throw KindMismatch(
          "pauli_obstruction_demo: candidates must be expectation functions");
    }
  }
  if (!(tol > 0.0)) throw ConfigError("pauli_obstruction_demo: tol must be positive");

  Rng rng(config.seed);
  PauliDemoReport report;
  report.tolerance = tol;
  report.candidates.resize(candidates.size());
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    report.candidates[ci].label =
        candidates[ci].label().empty() ? "candidate_" + std::to_string(ci)
                                       : candidates[ci].label();
    report.candidates[ci].return_deviation = std::numeric_limits<double>::infinity();
  }

  // 1. Recurrence parameter of the h-orbit, certified by the clockwork
  //    module's near-return search in a chart around a seeded state.
  {
    const ProjectivePoint scan_start = random_state(system.dim, rng);
    const Chart chart = chart_at(scan_start);
    const geometry::DynamicalSystem sys = chart_system(system, chart);
    const Vec u0 = chart_coords(chart, scan_start.representative());
    const auto found = clockwork::recurrence_obstruction(
        sys, u0, config.recurrence_horizon, config.recurrence_eps, config.integrator);
    if (!found) {
      throw ValidationFailed(
          "pauli_obstruction_demo: no near-return of the Hamiltonian orbit "
          "within the horizon");
    }
    report.recurrence_T = found->T;
    report.recurrence_distance = found->distance;
  }

  // 2. Pointwise bracket check {h, t} = 1 in a chart around each sample.
  for (int s = 0; s < config.bracket_samples; ++s) {
    const ProjectivePoint p = random_state(system.dim, rng);
    const Chart chart = chart_at(p);
    const Vec u = chart_coords(chart, p.representative());
    const geometry::DynamicalSystem sys = chart_system(system, chart);
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
      const geometry::ScalarField t_field = chart_field(chart, candidates[ci]);
      const double bracket =
          geometry::poisson_bracket(sys, sys.hamiltonian(), t_field, u);
      report.candidates[ci].bracket_deviation =
          std::max(report.candidates[ci].bracket_deviation, std::abs(bracket - 1.0));
    }
  }

  // 3. Grid timeliness along chart h-orbits over one recurrence period, plus
  //    the endpoint-only grid whose deviation is the deviation at s = T.
  std::vector<double> grid(static_cast<std::size_t>(config.grid_nodes) + 1);
  for (int i = 0; i <= config.grid_nodes; ++i) {
    grid[static_cast<std::size_t>(i)] =
        report.recurrence_T * static_cast<double>(i) / config.grid_nodes;
  }
  const std::vector<double> endpoints = {0.0, report.recurrence_T};
  for (int j = 0; j < config.orbit_starts; ++j) {
    const ProjectivePoint start = random_state(system.dim, rng);
    const Chart chart = chart_at(start);
    const geometry::DynamicalSystem sys = chart_system(system, chart);
    const Vec u0 = chart_coords(chart, start.representative());
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
      const clockwork::CandidateObservable cand{chart_field(chart, candidates[ci]),
                                                report.candidates[ci].label};
      const clockwork::TimelinessReport full = clockwork::verify_timeliness(
          sys, cand, {u0}, grid, tol, config.integrator);
      const clockwork::TimelinessReport ends = clockwork::verify_timeliness(
          sys, cand, {u0}, endpoints, tol, config.integrator);
      if (full.per_trajectory[0].outcome.verdict != flow::Verdict::Completed ||
          ends.per_trajectory[0].outcome.verdict != flow::Verdict::Completed) {
        throw ValidationFailed("pauli_obstruction_demo: orbit flow did not complete");
      }
      PauliCandidateRow& row = report.candidates[ci];
      row.timeliness_deviation =
          std::max(row.timeliness_deviation, full.per_trajectory[0].max_deviation);
      row.return_deviation =
          std::min(row.return_deviation, ends.per_trajectory[0].max_deviation);
    }
  }

  report.pass = true;
  for (PauliCandidateRow& row : report.candidates) {
    row.failed = row.bracket_deviation > tol || row.timeliness_deviation > tol;
    report.pass = report.pass && row.failed;
  }
  return report;
}

}  // namespace tempo::kahler
