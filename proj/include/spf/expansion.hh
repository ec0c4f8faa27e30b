#ifndef SPF_EXPANSION_HH
#define SPF_EXPANSION_HH

#include "dynamics.hh"
#include "linearization.hh"

namespace spf {

struct expansion_state {
    field v1, v2;
    double a1 = 0.0, a2 = 0.0;
    field w1, w2;
    double t = 0.0;
};

// Drives u, v1, v2 with the shared increment of each step, in a frozen
// consumption order (u, then v2's quadratic terms off the pre-step v1, then
// v1, then v2's linear step). v2 carries the Milstein term
// -1/2 u* (W^2 - beta^2 dt) for the iterated noise integral; without it the
// discrete z loses the sigma^3 order. A running checksum fingerprints the
// consumption order.
class expansion_runner {
  public:
    expansion_runner(const solitary_wave& wave, const lin_pack& pack,
                     const noise_model& nm, double dt, double sigma);
    void step(field& u, expansion_state& st, rng_stream& rs, fft_ws& ws);
    void step_with(field& u, expansion_state& st, const field& W, fft_ws& ws);
    uint64_t coupling_checksum() const { return checksum_; }
    const spfnls_stepper& u_stepper() const { return ustep_; }

  private:
    field forcing(const field& v1) const;  // i kappa {u*,v1,v1} - 1/2 beta^2 u*
    const solitary_wave* wave_;
    const lin_pack* pack_;
    noise_model nm_;
    double dt_, sigma_, beta2_;
    spfnls_stepper ustep_;
    lin_stepper lstep_;
    uint64_t checksum_;
    uint64_t nstep_;
};

uint64_t checksum_consume(uint64_t h, uint64_t step, uint64_t tag);

// z = u - u* - sigma v1 - sigma^2 v2 and z' = u - u* - sigma v1.
void compute_residuals(const field& u, const expansion_state& st,
                       const solitary_wave& wave, double sigma, field& z,
                       field& z_prime);

// a1 = P(v1), w1 = Pi v1, a2 = P(v2 - a1^2 u*_xx / 2),
// w2 = Pi(v2 - a1^2 u*_xx / 2).
void phase_decompose(expansion_state& st, const lin_pack& pack);

// Analytic resample of the wave at a shifted argument (the O(sigma^3)
// reconstruction test must not see interpolation error).
field resampled_wave(const model_params& prm, const grid& g, double shift);

// Orbital distance inf_a ||u - u*(. + a)||_{L2}: lattice seed by FFT
// cross-correlation, then golden-section to tol 1e-4 dx against the analytic
// translate.
struct orbital_fit {
    double dist;
    double shift;
};
orbital_fit orbital_distance(const field& u, const model_params& prm,
                             fft_ws& ws);

// Recenter on the wave frame at -shift, set v1 = (u - u*)/sigma, v2 = 0.
void reset_frame(field& u, expansion_state& st, double shift,
                 const solitary_wave& wave, double sigma, fft_ws& ws);

struct stop_caps {
    double eps;
    double sigma;
    double c1;
};

struct stopping_times {
    double tau_v1, tau_v2, tau_z, tau_z_prime;
};

// Per-path record used by stopping time detection and the study CSVs.
struct path_diag {
    std::vector<double> t;
    std::vector<double> a1, a2, w1n, w2n, zn, zpn;
    std::vector<double> v1_inf2, v1_66, v2_inf2, v2_66;
    std::vector<double> z_inf2, z_66, zp_inf2, zp_66;
};

// First record time each cap is exceeded (else T): ||v1|| <= eps/sigma,
// ||v2|| <= (eps/sigma)^2, ||z|| <= c1 eps^3, ||z'|| <= c1 eps^2, all in
// max(L^inf L^2, L^6 L^6).
stopping_times detect_stopping(const path_diag& d, const stop_caps& caps);

}  // namespace spf

#endif
