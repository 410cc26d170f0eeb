#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "generators.hpp"
#include "tnresp/io.hpp"

using namespace tnresp;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
    const fs::path dir = fs::path(testing::TempDir()) / "tnresp-config-io";
    fs::create_directories(dir);
    return (dir / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::string error_of(const std::string& text) {
    try {
        parse_config(KeyValueFile::parse(text, "t.cfg"));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = R"(# comment line
scenario.id = small
model.kind = kerr
model.chi = 0.1
space.cutoff = 12
state.kind = coherent
state.alpha = 0.5
grid.t0 = -8
grid.dt = 0.25
grid.count = 64
run.checks = none
)";

}  // namespace

TEST(ConfigParse, ReadsKeysAndDefaults) {
    const ScenarioConfig c = parse_config(KeyValueFile::parse(kMinimal));
    EXPECT_EQ(c.id, "small");
    EXPECT_EQ(c.model.kind, ModelKind::kerr);
    EXPECT_DOUBLE_EQ(c.model.chi, 0.1);
    EXPECT_EQ(c.cutoffs, std::vector<int>{12});
    EXPECT_EQ(c.count, 64);
    EXPECT_EQ(c.pad_factor, 4);
    EXPECT_TRUE(c.checks.empty());
    EXPECT_EQ(c.rank_cap, kDefaultRankCap);
    ASSERT_EQ(c.orders.size(), 1u);
    EXPECT_EQ(c.orders[0], std::make_pair(1, 1));
    const ScenarioConfig all = parse_config(KeyValueFile::parse("run.checks = all\n"));
    EXPECT_EQ(all.checks.size(), check_catalog().size());
}

TEST(ConfigParse, ErrorsCarryLineAndKey) {
    EXPECT_NE(error_of("grid.dt = 0.1\nnot a pair\n").find("t.cfg:2"), std::string::npos);
    const std::string dup = error_of("grid.dt = 0.1\n\ngrid.dt = 0.2\n");
    EXPECT_NE(dup.find("t.cfg:3"), std::string::npos);
    EXPECT_NE(dup.find("duplicate"), std::string::npos);
    const std::string unk = error_of("# x\nmodel.colour = red\n");
    EXPECT_NE(unk.find("t.cfg:2"), std::string::npos);
    EXPECT_NE(unk.find("model.colour"), std::string::npos);
    EXPECT_NE(error_of("grid.dt = fast\n").find("grid.dt"), std::string::npos);
    EXPECT_NE(error_of("model.kind = rotor\n").find("model.kind"), std::string::npos);
    EXPECT_NE(error_of("run.checks = causality, bogus\n").find("bogus"), std::string::npos);
    EXPECT_NE(error_of("grid.count = 4\n").find("grid.count"), std::string::npos);
    EXPECT_NE(error_of("run.orders = 2-1\n").find("run.orders"), std::string::npos);
    EXPECT_NE(error_of("current.0.waveform = square\n").find("current.0.waveform"), std::string::npos);
}

TEST(ConfigBuild, ScenarioAndPreconditions) {
    ScenarioConfig c = parse_config(KeyValueFile::parse(kMinimal));
    const Scenario s = build_scenario(c);
    EXPECT_EQ(s.pulses.size(), 2u);
    EXPECT_EQ(s.waveforms.size(), 2u);
    EXPECT_FALSE(s.stationary);
    EXPECT_EQ(s.grid, TimeGrid(-8, 0.25, 64, 4));

    c.cutoffs = {3};
    EXPECT_THROW(build_scenario(c), PreconditionError);

    ScenarioConfig wide = parse_config(KeyValueFile::parse(kMinimal));
    wide.currents.resize(1);
    wide.currents[0].width = 3.0;  // support runs past the window edges
    EXPECT_THROW(build_scenario(wide), PreconditionError);

    ScenarioConfig sharp = parse_config(KeyValueFile::parse(kMinimal));
    sharp.currents.resize(1);
    sharp.currents[0].width = 0.2;  // too much weight near Nyquist
    EXPECT_THROW(build_scenario(sharp), PreconditionError);
}

TEST(ConfigSweep, TransformsOneParameter) {
    const ScenarioConfig c = parse_config(KeyValueFile::parse(kMinimal));
    const auto a = with_sweep_value(c, "chi", 0.2);
    EXPECT_DOUBLE_EQ(a.model.chi, 0.2);
    EXPECT_NE(a.id, c.id);
    const auto b = with_sweep_value(c, "dt", 0.125);
    EXPECT_DOUBLE_EQ(b.dt * (b.count - 1), c.dt * (c.count - 1));
    EXPECT_EQ(b.count, 127);
    EXPECT_THROW(with_sweep_value(c, "dt", 0.3), ConfigError);
    EXPECT_EQ(with_sweep_value(c, "pad_factor", 2).pad_factor, 2);
    EXPECT_THROW(with_sweep_value(c, "pad_factor", 1.5), ConfigError);
    EXPECT_DOUBLE_EQ(with_sweep_value(c, "epsilon", 5e-3).fd_step, 5e-3);
    EXPECT_THROW(with_sweep_value(c, "omega", 1.0), ConfigError);
}

TEST(ConfigCsv, WaveformInterpolatesRelativeToConfig) {
    const std::string csv = scratch("wave.csv");
    {
        std::ofstream f(csv);
        f << "t,value\n-1,0\n0,1\n1,0\n";
    }
    WaveformSpec w;
    w.kind = "csv";
    w.file = "wave.csv";
    const auto f = w.function(fs::path(csv).parent_path().string());
    EXPECT_DOUBLE_EQ(f(-0.5), 0.5);
    EXPECT_DOUBLE_EQ(f(0.0), 1.0);
    EXPECT_DOUBLE_EQ(f(2.0), 0.0);
    w.file = "missing.csv";
    EXPECT_THROW(w.function(fs::path(csv).parent_path().string()), ConfigError);
}

TEST(ConfigSchema, CheckedInFileIsCurrent) {
    const std::string path = std::string(TNRESP_SOURCE_DIR) + "/configs/schema.txt";
    EXPECT_EQ(slurp(path), config_schema());
}

TEST(ConfigFiles, BundledConfigsParse) {
    for (const char* name : {"harmonic-baseline", "kerr-coherent", "kerr-thermal", "leak-failure", "csv-current"}) {
        const std::string path = std::string(TNRESP_SOURCE_DIR) + "/configs/" + name + ".cfg";
        EXPECT_NO_THROW(load_config(path)) << name;
    }
}

TEST(Blobs, TensorRoundTripIsExact) {
    gen::Rng rng(71);
    const TimeGrid g(-1.5, 0.125, 9, 3);
    std::vector<LegMeta> legs(3);
    legs[0] = {Side::minus, Split::minus, Label::f, "x"};
    legs[2].label = Label::fdag;
    CorrelationTensor t(g, legs);
    for (auto& v : t.data) v = cplx(gen::uniform(rng, -1, 1), gen::uniform(rng, -1, 1));
    const std::string path = scratch("t.tnrb");
    write_tensor_blob(path, t);
    const auto back = read_tensor_blob(path);
    EXPECT_EQ(back.grid, g);
    ASSERT_EQ(back.rank(), 3);
    EXPECT_EQ(back.legs[0].side, Side::minus);
    EXPECT_EQ(back.legs[0].split, Split::minus);
    EXPECT_EQ(back.legs[0].label, Label::f);
    EXPECT_EQ(back.legs[2].label, Label::fdag);
    EXPECT_EQ(back.data, t.data);
}

TEST(Blobs, TrajectoriesRoundTrip) {
    const Scenario s = kerr_coherent_scenario(TimeGrid(-2, 0.25, 10, 2), 0.1, 0.5, 8);
    const auto U = propagate(s.dynamics(), CurrentProfile::from_signal(gaussian_pulse(s.grid, 0.2, -1, 0.2)), s.grid);
    const std::string p = scratch("u.tnrb");
    write_trajectory_blob(p, U);
    const auto V = read_trajectory_blob(p);
    ASSERT_EQ(V.U.size(), U.U.size());
    for (size_t k = 0; k < U.U.size(); ++k) EXPECT_EQ(max_abs(Mat(V.U[k] - U.U[k])), 0.0);
    EXPECT_EQ(V.terminal.size(), U.terminal.size());
    const auto H = heisenberg_trajectory(U, s.coupling().entries, "pulse");
    const std::string h = scratch("h.tnrb");
    write_heisenberg_blob(h, H);
    const auto H2 = read_heisenberg_blob(h);
    EXPECT_EQ(H2.source, "pulse");
    for (int k = 0; k < H.size(); ++k) EXPECT_EQ(max_abs(Mat(H2[k] - H[k])), 0.0);
    EXPECT_THROW(read_tensor_blob(h), PreconditionError);  // different object kind
}

TEST(Blobs, RejectsOtherVersionsAndTrailingBytes) {
    const TimeGrid g(0, 0.5, 8, 1);
    CorrelationTensor t(g, std::vector<LegMeta>(1));
    const std::string path = scratch("v.tnrb");
    write_tensor_blob(path, t);
    std::string bytes = slurp(path);
    std::string bumped = bytes;
    bumped[4] = static_cast<char>(kBlobVersion + 1);
    const std::string p2 = scratch("v2.tnrb");
    std::ofstream(p2, std::ios::binary) << bumped;
    EXPECT_THROW(read_tensor_blob(p2), PreconditionError);
    const std::string p3 = scratch("v3.tnrb");
    std::ofstream(p3, std::ios::binary) << bytes << 'x';
    EXPECT_THROW(read_tensor_blob(p3), PreconditionError);
    const std::string p4 = scratch("v4.tnrb");
    std::ofstream(p4, std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    EXPECT_THROW(read_tensor_blob(p4), PreconditionError);
}

TEST(Csv, SignalRoundTrip) {
    gen::Rng rng(72);
    const TimeGrid g(-2.0, 0.125, 17, 2);
    const Signal s = gen::noise(rng, g, 1.0, true);
    const std::string path = scratch("s.csv");
    write_signal_csv(path, s);
    const Signal back = read_signal_csv(path, 2);
    EXPECT_EQ(back.grid.count, g.count);
    EXPECT_NEAR(back.grid.dt, g.dt, 1e-15);
    EXPECT_NEAR(back.grid.t0, g.t0, 1e-15);
    EXPECT_LE(max_abs(Vec(back.values - s.values)), 1e-15);
}

TEST(Csv, TensorRowsLabelRegions) {
    const TimeGrid g(0, 1, 8, 1);
    CorrelationTensor t(g, std::vector<LegMeta>(2));
    const std::string path = scratch("d.csv");
    write_tensor_csv(path, t, 1);
    std::ifstream f(path);
    std::string line;
    int rows = 0, forbidden = 0;
    std::getline(f, line);
    while (std::getline(f, line)) {
        ++rows;
        forbidden += line.find("forbidden") != std::string::npos;
    }
    EXPECT_EQ(rows, 64);
    EXPECT_EQ(forbidden, 28);  // t_out < t_in
}

TEST(Report, IdenticalInputsGiveIdenticalBytes) {
    const ScenarioConfig c = parse_config(KeyValueFile::parse(kMinimal));
    const Scenario s = build_scenario(c);
    const auto a = identity_suite(s, {"substitution-roundtrip", "kubo-equivalence"}, {1, c.seed});
    const auto b = identity_suite(s, {"substitution-roundtrip", "kubo-equivalence"}, {1, c.seed});
    const std::string ra = report_json(c, a, {"x.csv"});
    EXPECT_EQ(ra, report_json(c, b, {"x.csv"}));
    EXPECT_NE(ra.find("theta(0) = 1/2"), std::string::npos);
    EXPECT_EQ(ra.find("runtime"), std::string::npos);
    EXPECT_NE(timing_json(a, 1.0).find("total_seconds"), std::string::npos);
}

TEST(Audit, TermListingsAreComplete) {
    const std::string t = term_audit_json(2, 1);
    size_t count = 0;
    for (size_t p = t.find("\"canonical\""); p != std::string::npos; p = t.find("\"canonical\"", p + 1)) ++count;
    EXPECT_EQ(count, 8u);
    const std::string c = charged_term_audit_json(0, 1, 1, 0);
    EXPECT_NE(c.find("by_side"), std::string::npos);
    EXPECT_NE(c.find("flagged"), std::string::npos);
}
