#ifndef SPF_LINEARIZATION_HH
#define SPF_LINEARIZATION_HH

#include <string>

#include "model.hh"
#include "norms.hh"

namespace spf {

// L v = i Lap v + L_param v + i kappa (2|u*|^2 v + u*^2 conj v), assembled as
// a dense real 2n x 2n matrix. Spectrum from dgeev; the zero mode pair from
// inverse iteration. psi is the left null vector normalized so <u*_x,psi>=1,
// which makes the phase functional P(f) = <f,psi> and Pi0 f = P(f) u*_x.
struct lin_pack {
    const grid* g;
    model_params prm;
    std::vector<cplx> spectrum;  // 2n eigenvalues
    field right_null;            // = u*_x up to discretization
    field left_null;             // psi
    field u_star, u_star_x, u_star_xx;
    double gap_b;     // -max Re over nonzero spectrum
    double fit_M, fit_a;
    double op_frob;   // Frobenius norm of the assembled matrix
    double zero_abs;  // |eigenvalue| of the zero mode
};

void apply_lin(const field& vin, field& vout, const solitary_wave& wave,
               fft_ws& ws);

lin_pack build_linearization(const solitary_wave& wave, fft_ws& ws);

// Cache keyed by (grid, params) content hash; returns true on hit.
bool load_pack_cache(const std::string& dir, const solitary_wave& wave,
                     lin_pack& pack);
void store_pack_cache(const std::string& dir, const lin_pack& pack);
lin_pack cached_linearization(const solitary_wave& wave, fft_ws& ws,
                              const std::string& cache_dir);

double phase_functional(const field& f, const lin_pack& pack);
field project_pi0(const field& f, const lin_pack& pack);
field project_pi(const field& f, const lin_pack& pack);

// Strang step for the linear PDE dv = L v dt: exact A half steps around a
// closed-form exponential of the pointwise 2x2 system.
class lin_stepper {
  public:
    lin_stepper(const grid& g, const solitary_wave& wave, double dt);
    void step(field& v, fft_ws& ws);
    void step_block(std::vector<field>& vs, fft_ws& ws);
    double dt() const { return dt_; }

  private:
    const grid* g_;
    double dt_;
    std::vector<cplx> mA2;
    std::vector<double> E11, E12, E21, E22;
};

enum class semi_mode { timestep, matrix_exp };

field apply_semigroup(const field& f, double t, const lin_pack& pack,
                      semi_mode mode, fft_ws& ws, double dt = 1e-2);

// max over n_samples random unit-L2 fields of || P(.) Pi f ||_{L^r(0,T;L^p)};
// an empirical lower bound for the Strichartz-type constants.
double empirical_strichartz(const lin_pack& pack, const admissible_pair& pr,
                            int n_samples, double T, uint64_t seed,
                            fft_ws& ws, double dt = 1e-2);

}  // namespace spf

#endif
