#ifndef BLOWUP_PMP_HPP
#define BLOWUP_PMP_HPP

#include <json.hpp>

#include "blowup/core.hpp"
#include "blowup/dynamics.hpp"

// Adjoint integration, Hamiltonian-maximizing synthesis, and the maximum
// principle certification: the adjoint equation is
//   dpsi/dt = -[ (G/|y|) I + ((|y|G_r - G)/|y|^3) y y^T + A(t)^T ] psi
// and extremal controls maximize <psi, b(t,u)> over U.

namespace blowup {

enum class AdjointMode {
    Structured,      // the equation above, assembled term by term
    AutonomousFull,  // -f_y(y,u)^T psi from the autonomous field's Jacobian
};

// The matrix M with dpsi/dt = -M psi. origin_fallback reports the |y| = 0
// surrogate (G_r(t,0) I) being used.
Mat adjoint_matrix(const ControlSystem& sys, double t, const Vec& y, AdjointMode mode,
                   const Vec* u = nullptr, bool* origin_fallback = nullptr);

Vec adjoint_rhs(const ControlSystem& sys, double t, const Vec& y, const Vec& psi,
                bool* origin_fallback = nullptr);

enum class Direction { Forward, Backward };

struct AdjointOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-14;
    double t_end = std::numeric_limits<double>::quiet_NaN();  // default: range end
};

// Solves the linear adjoint along a stored trajectory from (t_ref, psi_ref).
CostatePath integrate_adjoint(const Trajectory& traj, const ControlSystem& sys, double t_ref,
                              const Vec& psi_ref, Direction dir,
                              const AdjointOptions& opts = {});

// Dense costate output (Hermite, slopes from the adjoint field along the
// trajectory).
class CostateView {
  public:
    CostateView(const ControlSystem& sys, const Trajectory& traj, const CostatePath& path);
    Vec psi(double t) const;

  private:
    const ControlSystem* sys_;
    TrajectoryView view_;
    const CostatePath* path_;
};

struct HamiltonianControl {
    Vec u;
    double value = 0.0;
    bool degenerate = false;
};

// argmax_u <psi, b(t,u)>; ball: radius B^T psi/|B^T psi|, finite set: lowest
// index among ties, custom: the supplied support maximizer.
HamiltonianControl hamiltonian_control(const ControlSystem& sys, double t, const Vec& psi);

struct ShootResult {
    Trajectory traj;
    CostatePath costate;
    std::vector<std::pair<double, double>> degenerate_windows;
    Mode mode = Mode::TI;
};

// Forward-integrates the coupled (y, psi) system under the Hamiltonian
// feedback u(t) = argmax <psi(t), b(t,u)>. Requires |psi0| = 1.
ShootResult shoot(const ControlSystem& sys, const Vec& psi0, const IntegrateOptions& opts,
                  Mode mode);

struct CertifyOptions {
    double gap_tol = 0.0;  // 0 => 1e-8 * sup|psi| * sup|b|
    double weighted_slack = 1e-9;
    int tail_k = 10;
    double tail_small_factor = 1e-3;  // |psi(t_10)| <= factor * |psi(t_1)|
};

PMPReport certify(const Trajectory& traj, const CostatePath& costate,
                  const ControlSystem& sys, Mode mode, const CertifyOptions& opts = {});

nlohmann::json report_json(const PMPReport& rep);

void write_costate_csv(std::ostream& out, const CostatePath& path);
CostatePath read_costate_csv(std::istream& in);

}  // namespace blowup

#endif
