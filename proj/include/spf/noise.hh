#ifndef SPF_NOISE_HH
#define SPF_NOISE_HH

#include <cstdint>
#include <random>
#include <string>

#include "grid.hh"

namespace spf {

uint64_t splitmix64(uint64_t& state);
// Stream seed for (base, sweep, path); consecutive indices give uncorrelated
// mt19937_64 seeds.
uint64_t derive_seed(uint64_t base, uint64_t sweep, uint64_t path);

// Explicit Box-Muller on top of mt19937_64: reproducible across library
// versions, unlike std::normal_distribution.
class rng_stream {
  public:
    explicit rng_stream(uint64_t seed) : eng(seed), have(false), spare(0.0) {}
    double gauss();
    uint64_t raw() { return eng(); }

  private:
    std::mt19937_64 eng;
    bool have;
    double spare;
};

enum class kernel_kind { gaussian, box, file };

// Correlation kernel phi (real), its DFT, beta = ||phi||_{L2}, and the noise
// strength sigma. sigma never enters sampling; integrators apply it.
struct noise_model {
    field phi;
    std::vector<cplx> phi_hat;  // DFT of phi wrapped to index 0
    double beta;
    double sigma;
};

noise_model make_noise(const grid& g, kernel_kind kind, double length_scale,
                       bool normalize_beta, double sigma, fft_ws& ws,
                       const std::string& file_path = "");

// phi * f by circular convolution, scaled to approximate the line integral.
field apply_phi(const field& f, const noise_model& nm, fft_ws& ws);

// (Phi dW)(x) over one step: iid N(0, dt/dx) at the nodes, then apply_phi.
// Purely real.
field sample_increment(const noise_model& nm, double dt, rng_stream& rs,
                       fft_ws& ws);

// beta^2, the Ito correction coefficient F = sum_k (Phi e_k)^2.
double ito_correction_coefficient(const noise_model& nm);

}  // namespace spf

#endif
