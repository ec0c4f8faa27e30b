#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "spf/io.hh"

using namespace spf;

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex(std::string()) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, -0.0, 2e-3, 67.0}) {
        std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("field files round trip through the grid pool") {
    std::filesystem::create_directories("io_scratch");
    grid g(64, 30.0);
    field f(g);
    for (int j = 0; j < g.n; j++)
        f.v[j] = cplx(std::sin(0.1 * j), std::cos(0.2 * j));
    write_field_file("io_scratch/f.bin", f);
    std::vector<grid> pool;
    field r1 = read_field_file("io_scratch/f.bin", pool);
    field r2 = read_field_file("io_scratch/f.bin", pool);
    CHECK(pool.size() == 1);
    CHECK(r1.g == r2.g);
    CHECK(r1.g->n == 64);
    CHECK(r1.g->box == 30.0);
    for (int j = 0; j < g.n; j++) CHECK(r1.v[j] == f.v[j]);
    CHECK_THROWS(read_field_file("io_scratch/nope.bin", pool));
}

TEST_CASE("config defaults survive a render-parse round trip") {
    run_config d;
    std::string text = render_config(d);
    run_config p = parse_config(text);
    CHECK(render_config(p) == text);
    CHECK(p.kappa == 8.0);
    CHECK(p.n == 1024);
    CHECK(p.box == 80.0);
    CHECK(p.sigma_sweep == std::vector<double>{0.05, 0.1});
}

TEST_CASE("config parser is strict") {
    CHECK_THROWS_AS(parse_config("[model]\nnview = 2\n"), config_error);
    CHECK_THROWS_AS(parse_config("[weird]\nnu = 2\n"), config_error);
    CHECK_THROWS_AS(parse_config("nu = 2\n"), config_error);
    CHECK_THROWS_AS(parse_config("[model]\nnu = abc\n"), config_error);
    CHECK_THROWS_AS(parse_config("[model]\nnu 2\n"), config_error);
    CHECK_THROWS_AS(parse_config("[grid]\nn = 2.5\n"), config_error);
    run_config c = parse_config(
        "# comment\n[model]\nnu = 2.0  # trailing\n\n[experiment]\n"
        "sigma_sweep = 0.1, 0.2, 0.3\n");
    CHECK(c.nu == 2.0);
    CHECK(c.sigma_sweep == std::vector<double>{0.1, 0.2, 0.3});
    run_config o;
    apply_config_entry(o, "noise", "sigma", "0.25");
    CHECK(o.sigma == 0.25);
    CHECK_THROWS_AS(apply_config_entry(o, "noise", "sigmaa", "1"),
                    config_error);
}

TEST_CASE("spec_from maps the config") {
    run_config c;
    c.n = 256;
    c.box = 60.0;
    c.dt = 5e-3;
    c.study = "fluctuation";
    c.dir = "outdir";
    ensemble_spec s = spec_from(c);
    CHECK(s.grid_n == 256);
    CHECK(s.grid_box == 60.0);
    CHECK(s.dt == 5e-3);
    CHECK(s.cache_dir == "outdir/cache");
    CHECK(s.prm.kappa == 8.0);
    CHECK_THROWS_AS(
        [] {
            run_config b;
            b.kernel = "triangle";
            return spec_from(b);
        }(),
        config_error);
}

TEST_CASE("hashed files verify and corruption is caught") {
    std::string dir = "io_verify";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::string h1 = write_hashed(dir + "/a.csv", "key = 1\n", "x,y\n1,2\n");
    append_manifest(dir, "a.csv", h1);
    std::string h2 = write_hashed(dir + "/b.txt", "key = 2\n", "hello\n");
    append_manifest(dir, "b.txt", h2);
    CHECK(verify_dir(dir).empty());

    // re-publishing the same file replaces its manifest row
    std::string h3 = write_hashed(dir + "/a.csv", "key = 1\n", "x,y\n1,3\n");
    append_manifest(dir, "a.csv", h3);
    CHECK(verify_dir(dir).empty());
    {
        std::ifstream mf(dir + "/MANIFEST.txt");
        int rows = 0;
        std::string l;
        while (std::getline(mf, l)) rows++;
        CHECK(rows == 2);
    }

    // flip one body byte
    {
        std::fstream fs(dir + "/a.csv",
                        std::ios::in | std::ios::out | std::ios::binary);
        fs.seekp(-2, std::ios::end);
        fs.put('9');
    }
    std::vector<std::string> bad = verify_dir(dir);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0] == "a.csv");
}
