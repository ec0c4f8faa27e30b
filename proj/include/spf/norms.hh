#ifndef SPF_NORMS_HH
#define SPF_NORMS_HH

#include <limits>
#include <vector>

#include "grid.hh"

namespace spf {

const double infty = std::numeric_limits<double>::infinity();

// Exponent pair for the mixed space-time norms, 2/r + 1/p = 1/2, r in [4,inf].
struct admissible_pair {
    double r, p;
    admissible_pair(double r_, double p_);
};

double lp_norm(const field& f, double p);
double hs_norm(const field& f, double s, fft_ws& ws);

double inner_real(const field& a, const field& b);  // real L2 pairing on R^2-valued fields

// L^r(t0,t1; L^p) of a uniformly sampled path, left-endpoint quadrature,
// r = inf as the max over samples.
double mixed_norm(const std::vector<field>& path, const admissible_pair& pr,
                  double t0, double t1);

// Running version used by trajectories and stopping times.
struct mixed_accum {
    double r, p;
    double dt;
    double acc;
    mixed_accum(const admissible_pair& pr, double dt_)
        : r(pr.r), p(pr.p), dt(dt_), acc(0.0) {}
    void add(const field& f);
    double value() const;
};

}  // namespace spf

#endif
