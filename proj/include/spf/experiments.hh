#ifndef SPF_EXPERIMENTS_HH
#define SPF_EXPERIMENTS_HH

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "expansion.hh"

namespace spf {

struct ensemble_spec {
    model_params prm;
    int grid_n = 256;
    double grid_box = 60.0;
    kernel_kind kernel = kernel_kind::gaussian;
    double length_scale = 1.0;
    bool normalize_beta = false;
    double dt = 2e-3;
    double t_end = 5.0;
    int record_stride = 50;
    int n_paths = 200;
    uint64_t base_seed = 12345;
    int workers = 0;  // 0: SPF_WORKERS env, else hardware
    std::vector<double> sigma_sweep;
    std::vector<double> eps_sweep;  // escape radii
    int windows = 2;
    std::string cache_dir;
};

int resolve_workers(int requested);
// Runs fn(path) for path in [0, n); any worker count gives the same
// per-path results, reductions happen in path order afterwards.
void parallel_paths(int n_paths, int workers,
                    const std::function<void(int)>& fn);

struct wilson_interval {
    double lo, hi;
};
wilson_interval wilson_ci(int k, int n, double z = 1.959963984540054);

// Two-sided KS p-value against N(0, var), asymptotic Kolmogorov tail.
double ks_gaussian_pvalue(std::vector<double> samples, double var);

struct escape_cell {
    double sigma, radius;
    int n, n_escaped;
    std::vector<int> per_window;
    wilson_interval ci;
    bool censored;
};
struct escape_report {
    std::vector<escape_cell> cells;
    double window_T;
    double fit_c, fit_k;  // freq ~ c T exp(-k eps^2 / sigma^2)
    double fit_r2;
};
escape_report run_escape_study(const ensemble_spec& spec);

struct diffusion_report {
    std::vector<double> sigmas;
    std::vector<double> t;                    // record mesh
    std::vector<std::vector<double>> var_a1;  // Var[sigma a1] per sigma
    std::vector<double> slope_reg, slope_qv, r2;
    std::vector<double> ks_p;  // 3 slices per sigma, flattened
    double oracle_q;           // sum_k P(i u* Phi e_k)^2
    std::vector<double> mean_a1_final, se_a1_final;
};
diffusion_report run_phase_diffusion_study(const ensemble_spec& spec);

struct order_report {
    std::vector<double> sigmas;
    std::vector<double> med_z, med_zp;        // at spec.dt
    std::vector<double> med_z_h, med_zp_h;    // at dt/2, coupled increments
    double slope_z, slope_zp, slope_z_h, slope_zp_h;
    double max_recon_violation;               // criterion 10 bookkeeping
};
order_report run_order_study(const ensemble_spec& spec);

struct fluctuation_report {
    std::vector<double> t;
    std::vector<double> w1_exact;  // E||w1||^2, noise-basis column propagation
    std::vector<double> w1_mc, w2_mc, v2_mc, z_mc;
    std::vector<double> w1_mc_se;
    double w1_exact_slope;   // log-log over [5/a, 10/a]
    double w2_exponent, v2_exponent;  // over [1/a, 10/a]
    double mc_exact_max_dev;          // in MC standard errors
    double max_recon_violation;
    double relax_rate;  // e^{-at} forgetting when v10 != 0 (0 when unused)
};
fluctuation_report run_fluctuation_study(const ensemble_spec& spec,
                                         bool with_v10 = false);

// Writers emit CSV + key/value summary with embedded config and content
// hashes; file bytes are reproducible for a fixed spec and any worker count.
void write_report(const escape_report& r, const ensemble_spec& s,
                  const std::string& dir);
void write_report(const diffusion_report& r, const ensemble_spec& s,
                  const std::string& dir);
void write_report(const order_report& r, const ensemble_spec& s,
                  const std::string& dir);
void write_report(const fluctuation_report& r, const ensemble_spec& s,
                  const std::string& dir);

}  // namespace spf

#endif
