#ifndef SPF_DYNAMICS_HH
#define SPF_DYNAMICS_HH

#include <string>

#include "model.hh"
#include "noise.hh"
#include "norms.hh"

namespace spf {

enum class scheme_t { strang_exact_noise, euler_maruyama };

struct stepper_config {
    double dt;
    scheme_t scheme;
    double t_end;
    int record_stride;
};

struct blowup_error : std::runtime_error {
    double t;
    explicit blowup_error(double t_);
};

// One full step of the SPFNLS in Ito form. strang_exact_noise: exact phase
// rotation u exp(-i sigma Phi dW) at the step start (this realizes the
// Stratonovich product, so the -1/2 beta^2 sigma^2 u Ito drift needs no
// separate term), then a 4th-order Yoshida composition of exact substeps
//   A: free group + nu rotation (Fourier multiplier),
//   C: eps damping, diagonal on (Re,Im),
//   B: Kerr rotation exp(i kappa |u|^2 h).
// Every substep is a pointwise or spectral isometry/contraction, so the eps=0
// conservation law and the a priori norm bound hold to machine precision.
// euler_maruyama: integrating-factor EM on the Ito form with the explicit
// -1/2 sigma^2 beta^2 u drift, for cross-validation.
class spfnls_stepper {
  public:
    spfnls_stepper(const grid& g, const model_params& prm,
                   const noise_model& nm, double dt, scheme_t sch);
    void step(field& u, rng_stream& rs, fft_ws& ws);
    // Externally supplied increment (pathwise coupling with the expansion).
    void step_with(field& u, const field& W, fft_ws& ws);
    double dt() const { return dt_; }

  private:
    void det_yoshida(field& u, fft_ws& ws);
    void det_em_stage(field& u, const field& W, fft_ws& ws);
    const grid* g_;
    model_params prm_;
    noise_model nm_;
    double sigma_, beta2_, dt_;
    scheme_t sch_;
    std::vector<cplx> mA_edge, mA_mid, mA_full;  // cached multipliers
    double damp_p[3], damp_q[3], wdt[3];         // per Yoshida stage
};

struct trajectory {
    std::vector<double> times;
    std::vector<field> states;  // empty in summary-only mode
    std::vector<double> l2, h1, h2;
    std::vector<double> mixed_inf2, mixed_66;  // running values at record times
    bool blowup = false;
    double blowup_t = 0.0;
};

trajectory simulate(const field& u0, const model_params& prm,
                    const noise_model& nm, const stepper_config& cfg,
                    rng_stream& rs, fft_ws& ws, bool keep_states = true);

// r(t) = ||u||^2 - ||u0||^2 + 2 eps int_0^t (gamma ||u||^2 - mu Re<conj u, u>),
// trapezoid on the record mesh; a pure discretization residual for this
// integrator.
std::vector<double> conservation_balance(const trajectory& traj,
                                         const model_params& prm);

}  // namespace spf

#endif
