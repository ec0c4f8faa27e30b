#ifndef SPF_IO_HH
#define SPF_IO_HH

#include <map>
#include <string>
#include <vector>

#include "dynamics.hh"
#include "experiments.hh"

namespace spf {

std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);

// Bare little-endian field record: uint64 n_points, double domain_length,
// then n interleaved (re, im) doubles.
void write_field_file(const std::string& path, const field& f);
field read_field_file(const std::string& path, std::vector<grid>& grid_pool);

void write_field_csv(const std::string& path, const field& f,
                     const std::string& config_echo);

struct config_error : std::runtime_error {
    explicit config_error(const std::string& m) : std::runtime_error(m) {}
};

// Flat INI: [section] key = value, '#' comments, strict (unknown section or
// key is a config_error).
struct run_config {
    // model
    double nu = 1.0, eps = 0.15, gamma = 1.0, mu = 1.05, kappa = 8.0;
    // grid
    int n = 1024;
    double box = 80.0;
    // noise
    std::string kernel = "gaussian";
    double length_scale = 1.0;
    bool normalize_beta = false;
    double sigma = 0.1;
    std::string kernel_file;
    // stepper
    double dt = 1e-3;
    std::string scheme = "strang_exact_noise";
    double t_end = 10.0;
    int record_stride = 100;
    // simulate
    std::string u0 = "wave";  // wave | file | zero
    std::string u0_file;
    // experiment
    std::string study = "diffusion";
    int n_paths = 200;
    uint64_t base_seed = 12345;
    int workers = 0;
    std::vector<double> sigma_sweep = {0.05, 0.1};
    std::vector<double> eps_sweep = {0.3};
    int windows = 2;
    // output
    std::string dir = "out";
    bool keep_states = false;
};

run_config parse_config(const std::string& text);
run_config load_config(const std::string& path);
// One [section] key = value entry, shared by the parser and --set overrides.
void apply_config_entry(run_config& c, const std::string& section,
                        const std::string& key, const std::string& value);
std::string render_config(const run_config& c);  // canonical INI round-trip

model_params params_from(const run_config& c);
ensemble_spec spec_from(const run_config& c);
kernel_kind kernel_from(const std::string& name);
scheme_t scheme_from(const std::string& name);

// Output files carry '# ' header lines (resolved config, then
// '# content_sha256 = <hash of the bytes after this line>'). write returns
// the full-file hash recorded in MANIFEST.txt by the callers.
std::string write_hashed(const std::string& path,
                         const std::string& config_echo,
                         const std::string& body);
void append_manifest(const std::string& dir, const std::string& file,
                     const std::string& full_hash);
// Re-checks MANIFEST entries and in-file content hashes; returns bad files.
std::vector<std::string> verify_dir(const std::string& dir);

std::string format_double(double v);  // shortest round-trip, reproducible

}  // namespace spf

#endif
