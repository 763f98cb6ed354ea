#pragma once

// Finite-dimensional quantum mechanics as geometry on projective space:
// phase-fixed unit representatives, horizontal tangents, the metric /
// symplectic pair (g, Omega) = (Re, Im) of the Hermitian inner product on
// horizontal lifts, expectation-value and Weinberg observable functions,
// projective Hamiltonian flows calibrated to the exp(-isF) Schroedinger
// orbit, Killing diagnostics, Darboux charts for bracket evaluation, and the
// numerical obstruction to quantum time observables.
//
// Normalization: g + i*Omega = <.,.> on horizontal lifts at unit norm (no
// factor of 2), together with the exp(-isF) flow direction.  With that pair
// of choices the pulled-back form that makes the realized flow Hamiltonian
// in a chart is TWICE the canonical block, which is exactly what
// chart_system installs; the geometry module's bracket then equals d/ds
// along the realized flow.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tempo/flow.hpp"
#include "tempo/geometry.hpp"
#include "tempo/rng.hpp"
#include "tempo/types.hpp"

namespace tempo::kahler {

// ---------------------------------------------------------------------------
// States and tangents.

struct QuantumSystem {
  int dim = 0;
  CMat hamiltonian;  // Hermitian, residual <= 1e-12 (checked)

  QuantumSystem(int dim, CMat hamiltonian);
};

// Hermiticity residual <= 1e-12 enforced; throws ConfigError otherwise.
QuantumSystem quantum_system_from_json(const nlohmann::json& doc);

// Unit vector with the phase fixed so its largest-modulus component (lowest
// index on ties) is real and positive.  Two projective points are equal iff
// their representatives coincide.
class ProjectivePoint {
 public:
  static ProjectivePoint from(const CVec& raw);  // normalizes and phase-fixes

  const CVec& representative() const { return v_; }
  int dim() const { return static_cast<int>(v_.size()); }

 private:
  explicit ProjectivePoint(CVec v) : v_(std::move(v)) {}
  CVec v_;
};

// min over phases of |a - e^{i theta} b| (computed by direct subtraction at
// the aligning phase, so it stays accurate near zero).
double projective_distance(const CVec& a, const CVec& b);
double projective_distance(const ProjectivePoint& a, const ProjectivePoint& b);

// Horizontal lift: vector orthogonal (Hermitian inner product) to the base
// representative.
class ProjectiveTangent {
 public:
  ProjectiveTangent(ProjectivePoint base, CVec vector);  // validates
  // Projects raw onto the horizontal space at base.
  static ProjectiveTangent horizontal(const ProjectivePoint& base, const CVec& raw);

  const ProjectivePoint& base() const { return base_; }
  const CVec& vector() const { return vec_; }
  // Multiplication by i (preserves horizontality).
  ProjectiveTangent j() const;

 private:
  ProjectivePoint base_;
  CVec vec_;
};

// ---------------------------------------------------------------------------
// Observable functions.

class ObservableFunction {
 public:
  enum class Kind { Expectation, Weinberg };

  // f(psi) = <psi, F psi> for Hermitian F.
  static ObservableFunction expectation(CMat F, std::string label = "");
  // Smooth function of expectation values e_j = <psi, F_j psi>: value and
  // its gradient with respect to the e_j.
  static ObservableFunction weinberg(std::vector<CMat> matrices,
                                     std::function<double(const Vec&)> value,
                                     std::function<Vec(const Vec&)> gradient,
                                     std::string label = "");
  static ObservableFunction weinberg_square(CMat F, std::string label = "");  // <F>^2
  static ObservableFunction weinberg_product(CMat F, CMat G,
                                             std::string label = "");  // <F><G>

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::string& label() const { return label_; }
  const std::vector<CMat>& matrices() const { return mats_; }
  const CMat& matrix() const;  // Expectation kind only (KindMismatch otherwise)

  // Value at a (unit) representative; uses normalized expectations so it is
  // scale- and phase-invariant.
  double value(const CVec& psi) const;
  // Combiner gradient w_j = d(value)/d(e_j) at psi's expectations (the
  // weights in the field formula below).
  Vec weights(const CVec& psi) const;
  // Hamiltonian vector field on representatives,
  //   X_f(psi) = -i sum_j w_j (F_j - <F_j>) psi,
  // the horizontal lift whose projection matches the exp(-isF) orbit for
  // expectation functions.  Homogeneous of degree 1 in psi.
  CVec field(const CVec& psi) const;

 private:
  ObservableFunction() = default;
  Kind kind_ = Kind::Expectation;
  int dim_ = 0;
  std::vector<CMat> mats_;
  std::function<double(const Vec&)> value_;
  std::function<Vec(const Vec&)> grad_;
  std::string label_;
};

// ---------------------------------------------------------------------------
// Core operations.

// (g, Omega) = (Re, Im) <X, Y> of horizontal lifts at a common base point.
// Throws BaseMismatch when the bases differ.
std::pair<double, double> kahler_forms(const ProjectiveTangent& X,
                                       const ProjectiveTangent& Y);

double expectation_value(const ObservableFunction& obs, const ProjectivePoint& psi);

// Integrates X_f on realified representatives [Re psi; Im psi], renormalizing
// and re-phase-fixing after each accepted step.  Sample states are therefore
// canonical representatives; interpolating BETWEEN samples is not meaningful
// (the phase snap is discontinuous when the largest component changes).
std::pair<flow::Trajectory, flow::FlowOutcome> projective_flow(
    const QuantumSystem& system, const ObservableFunction& obs,
    const ProjectivePoint& psi0, std::pair<double, double> span,
    const flow::IntegratorConfig& config = {});

// Flow endpoints at exact parameter values (no interpolation).
struct ProjectiveSampledFlow {
  std::vector<double> parameters;
  std::vector<ProjectivePoint> states;
  flow::FlowOutcome outcome;
};
ProjectiveSampledFlow projective_flow_sampled(const QuantumSystem& system,
                                              const ObservableFunction& obs,
                                              const ProjectivePoint& psi0,
                                              const std::vector<double>& grid,
                                              const flow::IntegratorConfig& config = {});

// Realified <-> complex state helpers for the flow above.
CVec unrealify(const Vec& y);
Vec realify(const CVec& psi);

// Eigendecomposition propagator exp(-isF) psi (the closed-form reference
// orbit; not integrated).
CVec evolve_exact(const CMat& F, const CVec& psi, double s);

// Lie-derivative residual of the metric along the flow of obs: sampled
// horizontal pairs are transported by the time-delta flow map (central
// finite differencing of the integrated flow, no phase snapping) and the
// maximal |g(X',Y') - g(X,Y)| / delta is returned.  Near zero characterizes
// expectation-kind functions.
double killing_residual(const ObservableFunction& obs, const ProjectivePoint& psi,
                        int tangent_samples, double delta = 1e-4,
                        std::uint64_t seed = 0, double fd_eps = 5e-4);

// Max drift of g(X_f, X_f) (= <F^2> - <F>^2 for expectation kind) along the
// integrated flow over the grid.  KindMismatch for Weinberg inputs unless
// allow_weinberg (diagnostic mode; nonzero drift expected there).
double killing_norm_constancy(const ObservableFunction& obs,
                              const ProjectivePoint& psi0,
                              const std::vector<double>& s_grid,
                              const flow::IntegratorConfig& config = {},
                              bool allow_weinberg = false);

// ---------------------------------------------------------------------------
// Darboux chart around a representative (real/imaginary parts of the
// components complementary to a fixed one, split layout x..., y...).

struct Chart {
  int n = 0;            // ambient complex dimension
  int fixed_index = 0;  // component made real positive, sqrt-eliminated
};

// Chart anchored at psi: fixes psi's largest-modulus component.
Chart chart_at(const ProjectivePoint& psi);
// Valid chart points keep the fixed component's squared modulus above
// 1/(2n): |u|^2 < 1 - 1/(2n).
bool chart_contains(const Chart& chart, const Vec& u);
CVec chart_embed(const Chart& chart, const Vec& u);
// Coordinates of a representative (phase-aligned on the fixed component).
Vec chart_coords(const Chart& chart, const CVec& psi);
// Scalar field u -> obs(chart_embed(u)) with its closed-form gradient.
geometry::ScalarField chart_field(const Chart& chart, const ObservableFunction& obs);
// Dynamical system (chart space, 2x canonical form, chart Hamiltonian); see
// the normalization note at the top of this header.
geometry::DynamicalSystem chart_system(const QuantumSystem& system,
                                       const Chart& chart);

// ---------------------------------------------------------------------------
// Candidate families and sampling.

// Generalized Pauli family: all symmetric and antisymmetric pair matrices
// plus the diagonal traceless ladder (for n = 2: sigma_x, sigma_y, sigma_z).
std::vector<CMat> pauli_like_basis(int n);
CMat random_hermitian(int n, Rng& rng);
ProjectivePoint random_state(int n, Rng& rng);

// ---------------------------------------------------------------------------
// Kahler identity battery (compatibility g(X,Y) = Omega(X,JY), J-invariance,
// phase invariance) over seeded random points and tangent pairs.

struct IdentityResiduals {
  double compatibility = 0.0;
  double j_invariance_g = 0.0;
  double j_invariance_omega = 0.0;
  double phase_invariance = 0.0;

  double max() const;
};

IdentityResiduals kahler_identity_residuals(int dim, int samples,
                                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// The obstruction demo: every expectation-kind candidate must fail either
// pointwise local timeliness ({h,t} = 1 in a chart) or grid timeliness along
// h-orbits through the recurrence time.

struct PauliDemoConfig {
  int bracket_samples = 20;  // chart points for the {h,t} check
  int orbit_starts = 2;      // h-orbits for the timeliness check
  int grid_nodes = 32;       // nodes on [0, T_recurrence]
  double recurrence_eps = 1e-6;
  double recurrence_horizon = 50.0;
  std::uint64_t seed = 0;
  flow::IntegratorConfig integrator = {};
};

struct PauliCandidateRow {
  std::string label;
  double bracket_deviation = 0.0;     // max |{h,t} - 1| over chart samples
  double timeliness_deviation = 0.0;  // max |t(c_s) - t(c_0) - s| over orbits
  double return_deviation = 0.0;      // min over orbits of the deviation at s = T
  bool failed = false;                // at least one check off by > tol
};

struct PauliDemoReport {
  double recurrence_T = 0.0;         // near-return parameter of the h-orbit
  double recurrence_distance = 0.0;  // chart distance at the located return
  std::vector<PauliCandidateRow> candidates;
  bool pass = false;  // every candidate failed at least one check
  double tolerance = 0.0;
};

// The recurrence time is located by recurrence_obstruction on a chart of a
// seeded state's orbit, and each candidate's timeliness is checked by
// verify_timeliness along chart h-orbits over one recurrence period (plus
// the endpoint-only grid {0, T} for the return deviation).  Throws
// KindMismatch on a Weinberg candidate and ValidationFailed when no
// near-return of the h-orbit is found before the horizon.
PauliDemoReport pauli_obstruction_demo(const QuantumSystem& system,
                                       const std::vector<ObservableFunction>& candidates,
                                       double tol,
                                       const PauliDemoConfig& config = {});

}  // namespace tempo::kahler
