#include "spf/io.hh"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace spf {

static_assert(std::endian::native == std::endian::little,
              "field files are raw little-endian doubles");

std::string sha256_hex(const void* data, size_t len) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int mdlen = 0;
    EVP_Digest(data, len, md, &mdlen, EVP_sha256(), nullptr);
    static const char hexd[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * mdlen);
    for (unsigned i = 0; i < mdlen; i++) {
        out.push_back(hexd[md[i] >> 4]);
        out.push_back(hexd[md[i] & 15]);
    }
    return out;
}

std::string sha256_hex(const std::string& s) {
    return sha256_hex(s.data(), s.size());
}

void write_field_file(const std::string& path, const field& f) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    uint64_t n = uint64_t(f.g->n);
    double box = f.g->box;
    os.write(reinterpret_cast<const char*>(&n), 8);
    os.write(reinterpret_cast<const char*>(&box), 8);
    os.write(reinterpret_cast<const char*>(f.v.data()),
             std::streamsize(16 * f.v.size()));
    if (!os) throw std::runtime_error("short write on " + path);
}

field read_field_file(const std::string& path, std::vector<grid>& grid_pool) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    uint64_t n = 0;
    double box = 0.0;
    is.read(reinterpret_cast<char*>(&n), 8);
    is.read(reinterpret_cast<char*>(&box), 8);
    if (!is || n == 0 || n > (1u << 24))
        throw std::runtime_error("bad field header in " + path);
    const grid* g = nullptr;
    for (const grid& cand : grid_pool)
        if (uint64_t(cand.n) == n && cand.box == box) g = &cand;
    if (g == nullptr) {
        // the pool hands out stable addresses as long as it never reallocates
        if (grid_pool.capacity() == grid_pool.size())
            grid_pool.reserve(grid_pool.size() + 8);
        grid_pool.emplace_back(int(n), box);
        g = &grid_pool.back();
    }
    field f(*g);
    is.read(reinterpret_cast<char*>(f.v.data()), std::streamsize(16 * n));
    if (!is) throw std::runtime_error("truncated field data in " + path);
    return f;
}

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string write_hashed(const std::string& path,
                         const std::string& config_echo,
                         const std::string& body) {
    std::string head;
    size_t pos = 0;
    while (pos < config_echo.size()) {
        size_t nl = config_echo.find('\n', pos);
        if (nl == std::string::npos) nl = config_echo.size();
        head += "# " + config_echo.substr(pos, nl - pos) + "\n";
        pos = nl + 1;
    }
    head += "# content_sha256 = " + sha256_hex(body) + "\n";
    std::string all = head + body;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os.write(all.data(), std::streamsize(all.size()));
    if (!os) throw std::runtime_error("short write on " + path);
    return sha256_hex(all);
}

void write_field_csv(const std::string& path, const field& f,
                     const std::string& config_echo) {
    std::ostringstream body;
    body << "x,re,im\n";
    for (int j = 0; j < f.g->n; j++)
        body << format_double(f.g->x[j]) << ","
             << format_double(f.v[j].real()) << ","
             << format_double(f.v[j].imag()) << "\n";
    write_hashed(path, config_echo, body.str());
}

void append_manifest(const std::string& dir, const std::string& file,
                     const std::string& full_hash) {
    std::string mpath = dir + "/MANIFEST.txt";
    std::vector<std::string> lines;
    {
        std::ifstream is(mpath);
        std::string l;
        while (std::getline(is, l)) lines.push_back(l);
    }
    std::string entry = full_hash + "  " + file;
    bool replaced = false;
    for (std::string& l : lines) {
        size_t sep = l.find("  ");
        if (sep != std::string::npos && l.substr(sep + 2) == file) {
            l = entry;
            replaced = true;
        }
    }
    if (!replaced) lines.push_back(entry);
    std::ofstream os(mpath, std::ios::binary | std::ios::trunc);
    for (const std::string& l : lines) os << l << "\n";
}

static bool read_all(const std::string& path, std::string& out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    std::ostringstream ss;
    ss << is.rdbuf();
    out = ss.str();
    return true;
}

std::vector<std::string> verify_dir(const std::string& dir) {
    std::vector<std::string> bad;
    auto flag = [&](const std::string& f) {
        for (const std::string& b : bad)
            if (b == f) return;
        bad.push_back(f);
    };
    {
        std::ifstream is(dir + "/MANIFEST.txt");
        std::string l;
        while (std::getline(is, l)) {
            size_t sep = l.find("  ");
            if (sep == std::string::npos) continue;
            std::string hash = l.substr(0, sep), file = l.substr(sep + 2);
            std::string bytes;
            if (!read_all(dir + "/" + file, bytes) ||
                sha256_hex(bytes) != hash)
                flag(file);
        }
    }
    const std::string marker = "# content_sha256 = ";
    for (const auto& ent : std::filesystem::directory_iterator(dir)) {
        if (!ent.is_regular_file()) continue;
        std::string name = ent.path().filename().string();
        if (name == "MANIFEST.txt") continue;
        std::string bytes;
        if (!read_all(ent.path().string(), bytes)) continue;
        if (bytes.rfind("# ", 0) != 0) continue;
        size_t mp = bytes.find(marker);
        if (mp == std::string::npos) continue;
        size_t nl = bytes.find('\n', mp);
        if (nl == std::string::npos) continue;
        std::string want = bytes.substr(mp + marker.size(),
                                        nl - mp - marker.size());
        if (sha256_hex(bytes.data() + nl + 1, bytes.size() - nl - 1) != want)
            flag(name);
    }
    return bad;
}

static std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

static double parse_num(const std::string& s) {
    size_t idx = 0;
    double v;
    try {
        v = std::stod(s, &idx);
    } catch (const std::exception&) {
        throw config_error("bad number: '" + s + "'");
    }
    if (idx != s.size()) throw config_error("bad number: '" + s + "'");
    return v;
}

static int parse_int(const std::string& s) {
    double v = parse_num(s);
    int i = int(v);
    if (double(i) != v) throw config_error("expected integer: '" + s + "'");
    return i;
}

static uint64_t parse_u64(const std::string& s) {
    size_t idx = 0;
    uint64_t v;
    try {
        v = std::stoull(s, &idx);
    } catch (const std::exception&) {
        throw config_error("bad seed: '" + s + "'");
    }
    if (idx != s.size()) throw config_error("bad seed: '" + s + "'");
    return v;
}

static bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw config_error("bad bool: '" + s + "'");
}

static std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t c = s.find(',', pos);
        if (c == std::string::npos) c = s.size();
        std::string item = trim(s.substr(pos, c - pos));
        if (!item.empty()) out.push_back(parse_num(item));
        pos = c + 1;
    }
    return out;
}

void apply_config_entry(run_config& c, const std::string& section,
                        const std::string& key, const std::string& value) {
    auto is = [&](const char* sec, const char* k) {
        return section == sec && key == k;
    };
    if (is("model", "nu")) c.nu = parse_num(value);
    else if (is("model", "eps")) c.eps = parse_num(value);
    else if (is("model", "gamma")) c.gamma = parse_num(value);
    else if (is("model", "mu")) c.mu = parse_num(value);
    else if (is("model", "kappa")) c.kappa = parse_num(value);
    else if (is("grid", "n")) c.n = parse_int(value);
    else if (is("grid", "box")) c.box = parse_num(value);
    else if (is("noise", "kernel")) c.kernel = value;
    else if (is("noise", "length_scale")) c.length_scale = parse_num(value);
    else if (is("noise", "normalize_beta")) c.normalize_beta = parse_bool(value);
    else if (is("noise", "sigma")) c.sigma = parse_num(value);
    else if (is("noise", "kernel_file")) c.kernel_file = value;
    else if (is("stepper", "dt")) c.dt = parse_num(value);
    else if (is("stepper", "scheme")) c.scheme = value;
    else if (is("stepper", "t_end")) c.t_end = parse_num(value);
    else if (is("stepper", "record_stride")) c.record_stride = parse_int(value);
    else if (is("simulate", "u0")) c.u0 = value;
    else if (is("simulate", "u0_file")) c.u0_file = value;
    else if (is("experiment", "study")) c.study = value;
    else if (is("experiment", "n_paths")) c.n_paths = parse_int(value);
    else if (is("experiment", "base_seed")) c.base_seed = parse_u64(value);
    else if (is("experiment", "workers")) c.workers = parse_int(value);
    else if (is("experiment", "sigma_sweep")) c.sigma_sweep = parse_list(value);
    else if (is("experiment", "eps_sweep")) c.eps_sweep = parse_list(value);
    else if (is("experiment", "windows")) c.windows = parse_int(value);
    else if (is("output", "dir")) c.dir = value;
    else if (is("output", "keep_states")) c.keep_states = parse_bool(value);
    else
        throw config_error("unknown config entry [" + section + "] " + key);
}

run_config parse_config(const std::string& text) {
    run_config c;
    std::istringstream is(text);
    std::string raw, section;
    int lineno = 0;
    while (std::getline(is, raw)) {
        lineno++;
        std::string line = raw;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("line " + std::to_string(lineno) +
                                   ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "grid" &&
                section != "noise" && section != "stepper" &&
                section != "simulate" && section != "experiment" &&
                section != "output")
                throw config_error("unknown section [" + section + "]");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) +
                               ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw config_error("line " + std::to_string(lineno) +
                               ": entry before any [section]");
        apply_config_entry(c, section, key, value);
    }
    return c;
}

run_config load_config(const std::string& path) {
    std::string text;
    if (!read_all(path, text))
        throw config_error("cannot read config file " + path);
    return parse_config(text);
}

std::string render_config(const run_config& c) {
    std::ostringstream o;
    auto list = [](const std::vector<double>& v) {
        std::string r;
        for (size_t i = 0; i < v.size(); i++)
            r += (i ? "," : "") + format_double(v[i]);
        return r;
    };
    o << "[model]\n";
    o << "nu = " << format_double(c.nu) << "\n";
    o << "eps = " << format_double(c.eps) << "\n";
    o << "gamma = " << format_double(c.gamma) << "\n";
    o << "mu = " << format_double(c.mu) << "\n";
    o << "kappa = " << format_double(c.kappa) << "\n";
    o << "\n[grid]\n";
    o << "n = " << c.n << "\n";
    o << "box = " << format_double(c.box) << "\n";
    o << "\n[noise]\n";
    o << "kernel = " << c.kernel << "\n";
    o << "length_scale = " << format_double(c.length_scale) << "\n";
    o << "normalize_beta = " << (c.normalize_beta ? "true" : "false") << "\n";
    o << "sigma = " << format_double(c.sigma) << "\n";
    if (!c.kernel_file.empty()) o << "kernel_file = " << c.kernel_file << "\n";
    o << "\n[stepper]\n";
    o << "dt = " << format_double(c.dt) << "\n";
    o << "scheme = " << c.scheme << "\n";
    o << "t_end = " << format_double(c.t_end) << "\n";
    o << "record_stride = " << c.record_stride << "\n";
    o << "\n[simulate]\n";
    o << "u0 = " << c.u0 << "\n";
    if (!c.u0_file.empty()) o << "u0_file = " << c.u0_file << "\n";
    o << "\n[experiment]\n";
    o << "study = " << c.study << "\n";
    o << "n_paths = " << c.n_paths << "\n";
    o << "base_seed = " << c.base_seed << "\n";
    o << "workers = " << c.workers << "\n";
    o << "sigma_sweep = " << list(c.sigma_sweep) << "\n";
    o << "eps_sweep = " << list(c.eps_sweep) << "\n";
    o << "windows = " << c.windows << "\n";
    o << "\n[output]\n";
    o << "dir = " << c.dir << "\n";
    o << "keep_states = " << (c.keep_states ? "true" : "false") << "\n";
    return o.str();
}

model_params params_from(const run_config& c) {
    return make_params(c.nu, c.eps, c.gamma, c.mu, c.kappa);
}

kernel_kind kernel_from(const std::string& name) {
    if (name == "gaussian") return kernel_kind::gaussian;
    if (name == "box") return kernel_kind::box;
    if (name == "file") return kernel_kind::file;
    throw config_error("unknown kernel '" + name + "'");
}

scheme_t scheme_from(const std::string& name) {
    if (name == "strang_exact_noise") return scheme_t::strang_exact_noise;
    if (name == "euler_maruyama") return scheme_t::euler_maruyama;
    throw config_error("unknown scheme '" + name + "'");
}

ensemble_spec spec_from(const run_config& c) {
    ensemble_spec s;
    s.prm = params_from(c);
    s.grid_n = c.n;
    s.grid_box = c.box;
    s.kernel = kernel_from(c.kernel);
    s.length_scale = c.length_scale;
    s.normalize_beta = c.normalize_beta;
    s.dt = c.dt;
    s.t_end = c.t_end;
    s.record_stride = c.record_stride;
    s.n_paths = c.n_paths;
    s.base_seed = c.base_seed;
    s.workers = c.workers;
    s.sigma_sweep = c.sigma_sweep;
    s.eps_sweep = c.eps_sweep;
    s.windows = c.windows;
    s.cache_dir = c.dir + "/cache";
    return s;
}

}  // namespace spf
