#ifndef SPF_MODEL_HH
#define SPF_MODEL_HH

#include "grid.hh"

namespace spf {

// nu + eps(gamma, mu) parametric terms + kappa Kerr coefficient; theta and
// wave_scale derived: cos 2theta = gamma/mu on the branch theta in (0, pi/4)
// so sin 2theta > 0, wave_scale = sqrt(nu + eps mu sin 2theta).
struct model_params {
    double nu, eps, gamma, mu, kappa;
    double theta, wave_scale;
};

// eps = 0 is allowed (conservative limit used by the conservation checks).
model_params make_params(double nu, double eps, double gamma, double mu,
                         double kappa);

struct solitary_wave {
    field u_star, u_star_x, u_star_xx;
    model_params prm;
};

// Samples A sech(s(x+shift)) e^{i theta}, A = sqrt(2 s^2 / kappa), with
// spectral derivatives. Requires >= 16 points per soliton width 4/s and
// tails below 1e-12 at the box edge.
solitary_wave make_wave(const model_params& prm, const grid& g, double shift,
                        fft_ws& ws);

// {a,b,c} = a b conj(c) + a conj(b) c + conj(a) b c
field triple_bracket(const field& a, const field& b, const field& c);

// i Lap u - i nu u - eps(gamma u - mu conj u) + (i kappa/3){u,u,u}
field pfnls_rhs(const field& u, const model_params& prm, fft_ws& ws);

}  // namespace spf

#endif
