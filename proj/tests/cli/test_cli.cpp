#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "emgc/codec.hpp"
#include "emgc/losses.hpp"

namespace fs = std::filesystem;
using emgc::cli::run;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;

    std::map<std::string, std::string> kv() const {
        std::map<std::string, std::string> m;
        std::istringstream in(out);
        for (std::string line; std::getline(in, line);) {
            const auto eq = line.find('=');
            if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
        }
        return m;
    }
};

Outcome invoke(std::vector<std::string> args, std::optional<std::string> threads = std::nullopt) {
    args.insert(args.begin(), "emgc");
    std::ostringstream out, err;
    Outcome o;
    o.code = run(args, out, err, threads);
    o.out = out.str();
    o.err = err.str();
    return o;
}

// A fresh directory per test case, removed afterwards.
class Scratch {
public:
    Scratch() {
        std::random_device rd;
        dir_ = fs::temp_directory_path() / ("emgc_cli_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(dir_);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }
    std::string operator()(const std::string& name) const { return (dir_ / name).string(); }

private:
    fs::path dir_;
};

emgc::Bytes slurp(const std::string& path) { return emgc::read_file(path); }

}  // namespace

TEST_CASE("synth writes files of the predicted sizes") {
    Scratch s;
    const Outcome o = invoke({"synth", s("v.triv"), "--truth", s("t.emgc"), "--report", "kv"});
    REQUIRE(o.code == 0);
    CHECK(fs::file_size(s("v.triv")) == 20 + 4 * 8 * 8 * 64);
    CHECK(fs::file_size(s("t.emgc")) == 32 + 8 * 8 * (16 * 4 + 9));
    CHECK(o.kv().at("bytes") == std::to_string(20 + 4 * 8 * 8 * 64));
    const auto truth = emgc::decode(slurp(s("t.emgc")));
    CHECK(truth.header.components == 4);
    CHECK(emgc::reconstruct(truth) == emgc::read_volume(slurp(s("v.triv"))));
}

TEST_CASE("noise changes the volume and only the noise does") {
    Scratch s;
    REQUIRE(invoke({"synth", s("a.triv"), "--seed", "4"}).code == 0);
    REQUIRE(invoke({"synth", s("b.triv"), "--seed", "4"}).code == 0);
    REQUIRE(invoke({"synth", s("c.triv"), "--seed", "4", "--noise-divisor", "200"}).code == 0);
    CHECK(slurp(s("a.triv")) == slurp(s("b.triv")));
    CHECK(slurp(s("a.triv")) != slurp(s("c.triv")));
    CHECK(invoke({"synth", s("d.triv"), "--noise-divisor", "0.5"}).code == 1);
    CHECK(invoke({"synth", s("d.triv"), "--width", "0"}).code == 1);
    CHECK_FALSE(fs::exists(s("d.triv")));
}

TEST_CASE("compress reports the compression ratio and writes a decodable file") {
    Scratch s;
    REQUIRE(invoke({"synth", s("v.triv"), "--seed", "1"}).code == 0);
    const Outcome o = invoke({"compress", s("v.triv"), s("v.emgc"), "--k", "4", "--window", "3", "--epochs",
                              "150", "--scheduler", "sliding", "--report", "kv"});
    REQUIRE(o.code == 0);
    const auto kv = o.kv();
    for (const char* key : {"l_i", "ratio", "converged_pct", "wall_ms"}) CHECK(kv.count(key) == 1);
    CHECK(std::stod(kv.at("ratio")) == doctest::Approx(64.0 / 18.0).epsilon(1e-9));
    CHECK(fs::file_size(s("v.emgc")) == emgc::encoded_size(8, 8, 4));
    CHECK(std::stoul(kv.at("bytes_out")) == emgc::encoded_size(8, 8, 4));

    const auto img = emgc::decode(slurp(s("v.emgc")));
    const auto volume = emgc::read_volume(slurp(s("v.triv")));
    CHECK(std::stod(kv.at("l_i")) ==
          doctest::Approx(emgc::image_loss(volume, emgc::reconstruct(img))).epsilon(1e-8));
}

TEST_CASE("text reports align the same keys") {
    Scratch s;
    REQUIRE(invoke({"synth", s("v.triv"), "--width", "2", "--height", "2", "--bins", "16"}).code == 0);
    const Outcome o = invoke({"compress", s("v.triv"), s("v.emgc"), "--epochs", "20"});
    REQUIRE(o.code == 0);
    CHECK(o.out.find("l_i ") == 0);
    CHECK(o.out.find("converged_pct") != std::string::npos);
}

TEST_CASE("compress is repeatable with one worker") {
    Scratch s;
    REQUIRE(invoke({"synth", s("v.triv"), "--width", "4", "--height", "4", "--bins", "32"}).code == 0);
    for (const char* sched : {"independent", "sliding", "random"}) {
        CAPTURE(sched);
        const std::vector<std::string> base{"compress", s("v.triv"), "", "--k", "2", "--epochs", "60",
                                            "--scheduler", sched, "--seed", "7"};
        auto first = base, second = base;
        first[2] = s("a.emgc");
        second[2] = s("b.emgc");
        REQUIRE(invoke(first).code == 0);
        REQUIRE(invoke(second).code == 0);
        CHECK(slurp(s("a.emgc")) == slurp(s("b.emgc")));
    }
}

TEST_CASE("a single pixel compresses identically under every scheduler") {
    Scratch s;
    REQUIRE(invoke({"synth", s("v.triv"), "--width", "1", "--height", "1", "--bins", "64"}).code == 0);
    REQUIRE(invoke({"compress", s("v.triv"), s("i.emgc"), "--scheduler", "independent", "--epochs", "300"}).code == 0);
    REQUIRE(invoke({"compress", s("v.triv"), s("r.emgc"), "--scheduler", "random", "--epochs", "300"}).code == 0);
    CHECK(slurp(s("i.emgc")) == slurp(s("r.emgc")));
}

TEST_CASE("decompress restores the volume shape") {
    Scratch s;
    REQUIRE(invoke({"synth", s("v.triv"), "--width", "3", "--height", "5", "--bins", "40"}).code == 0);
    REQUIRE(invoke({"compress", s("v.triv"), s("v.emgc"), "--epochs", "30"}).code == 0);
    const Outcome o = invoke({"decompress", s("v.emgc"), s("r.triv"), "--report", "kv"});
    REQUIRE(o.code == 0);
    const auto r = emgc::read_volume(slurp(s("r.triv")));
    CHECK(r.width == 3);
    CHECK(r.height == 5);
    CHECK(r.bins == 40);
    CHECK(o.kv().at("bins") == "40");
}

TEST_CASE("failures leave no output behind") {
    Scratch s;
    Outcome o = invoke({"compress", s("missing.triv"), s("out.emgc")});
    CHECK(o.code == 2);
    CHECK_FALSE(o.err.empty());
    CHECK_FALSE(fs::exists(s("out.emgc")));
    CHECK_FALSE(fs::exists(s("out.emgc.partial")));

    REQUIRE(invoke({"synth", s("v.triv"), "--width", "2", "--height", "2", "--bins", "8"}).code == 0);
    REQUIRE(invoke({"compress", s("v.triv"), s("v.emgc"), "--epochs", "10"}).code == 0);
    auto bytes = slurp(s("v.emgc"));
    bytes.resize(bytes.size() - 3);
    emgc::write_file(s("cut.emgc"), bytes);
    CHECK(invoke({"decompress", s("cut.emgc"), s("r.triv")}).code == 2);
    CHECK_FALSE(fs::exists(s("r.triv")));

    bytes = slurp(s("v.triv"));
    bytes[0] = 'X';
    emgc::write_file(s("bad.triv"), bytes);
    CHECK(invoke({"compress", s("bad.triv"), s("x.emgc")}).code == 2);
    CHECK(invoke({"eval", s("bad.triv"), s("v.triv")}).code == 2);
}

TEST_CASE("usage errors") {
    Scratch s;
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"frobnicate"}).code == 1);
    REQUIRE(invoke({"synth", s("v.triv"), "--width", "2", "--height", "2", "--bins", "8"}).code == 0);
    CHECK(invoke({"compress", s("v.triv"), s("o.emgc"), "--window", "4"}).code == 1);
    CHECK(invoke({"compress", s("v.triv"), s("o.emgc"), "--scheduler", "greedy"}).code == 1);
    CHECK(invoke({"compress", s("v.triv"), s("o.emgc"), "--report", "json"}).code == 1);
    CHECK(invoke({"compress", s("v.triv")}).code == 1);
    CHECK_FALSE(fs::exists(s("o.emgc")));
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("eval is zero on equal volumes and symmetric") {
    Scratch s;
    REQUIRE(invoke({"synth", s("a.triv"), "--seed", "2"}).code == 0);
    REQUIRE(invoke({"synth", s("b.triv"), "--seed", "2", "--noise-divisor", "50"}).code == 0);
    const Outcome same = invoke({"eval", s("a.triv"), s("a.triv"), "--report", "kv"});
    REQUIRE(same.code == 0);
    CHECK(std::stod(same.kv().at("l_i")) == 0.0);
    CHECK(std::stod(same.kv().at("mse")) == 0.0);

    const Outcome ab = invoke({"eval", s("a.triv"), s("b.triv"), "--report", "kv"});
    const Outcome ba = invoke({"eval", s("b.triv"), s("a.triv"), "--report", "kv"});
    CHECK(ab.kv().at("l_i") == ba.kv().at("l_i"));
    const auto a = emgc::read_volume(slurp(s("a.triv")));
    const auto b = emgc::read_volume(slurp(s("b.triv")));
    CHECK(std::stod(ab.kv().at("l_i")) == doctest::Approx(emgc::image_loss(a, b)).epsilon(1e-9));
    CHECK(std::stod(ab.kv().at("pixel_min")) <= std::stod(ab.kv().at("pixel_median")));
    CHECK(std::stod(ab.kv().at("pixel_median")) <= std::stod(ab.kv().at("pixel_max")));
}

TEST_CASE("gradcheck") {
    const Outcome def = invoke({"gradcheck", "--report", "kv"});
    CHECK(def.code == 0);
    CHECK(def.kv().at("count") == "500");
    CHECK(std::stod(def.kv().at("max_rel_error")) <= 1e-4);

    const Outcome a = invoke({"gradcheck", "--seed", "11", "--count", "40", "--report", "kv"});
    const Outcome b = invoke({"gradcheck", "--seed", "11", "--count", "40", "--report", "kv"});
    CHECK(a.kv().at("max_rel_error") == b.kv().at("max_rel_error"));
    CHECK(a.kv().at("worst_instance") == b.kv().at("worst_instance"));

    const Outcome none = invoke({"gradcheck", "--count", "0"});
    CHECK(none.code == 0);
    CHECK(none.err.find("warning") != std::string::npos);
}

TEST_CASE("EMGC_THREADS overrides the worker flag") {
    Scratch s;
    REQUIRE(invoke({"synth", s("v.triv"), "--width", "4", "--height", "4", "--bins", "24"}).code == 0);
    REQUIRE(invoke({"compress", s("v.triv"), s("one.emgc"), "--scheduler", "independent", "--epochs", "40"}).code == 0);
    REQUIRE(invoke({"compress", s("v.triv"), s("four.emgc"), "--scheduler", "independent", "--epochs", "40"},
                   "4").code == 0);
    // Independent fits draw per-pixel seeds, so the worker count cannot change them.
    CHECK(slurp(s("one.emgc")) == slurp(s("four.emgc")));
    CHECK(invoke({"compress", s("v.triv"), s("x.emgc")}, "zero").code == 1);
    CHECK(invoke({"compress", s("v.triv"), s("x.emgc")}, "0").code == 1);
    CHECK_FALSE(fs::exists(s("x.emgc")));
}
