// SPDX-License-Identifier: Apache-2.0
//
// mmrx: behavioral model of a fully-digital 28 GHz array receiver
// Copyright (C) 2026 The mmrx authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mmrx/io.hpp"
#include "mmrx/serialize.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mmrx;

namespace
{
    std::filesystem::path scratch(const std::string &name)
    {
        auto dir = std::filesystem::temp_directory_path() / "mmrx_tests";
        std::filesystem::create_directories(dir);
        return dir / name;
    }
}

TEST(ScenarioJson, EmptyObjectGivesDefaults)
{
    const auto sc = scenario_from_json(json::object());
    EXPECT_EQ(scenario_to_json(sc), scenario_to_json(Scenario{}));
}

TEST(ScenarioJson, RoundTrip)
{
    Scenario sc;
    sc.geometry.n_elements = 8;
    sc.taper = TaperSpec::uniform();
    sc.element_pattern.cos_exponent = 1.0;
    sc.frontend.chain.vga_setting_db = -3.0;
    sc.frontend.chain.include_balun = true;
    sc.mismatch.explicit_values = std::vector<ChannelMismatch>(8, {1.5, -20.0});
    OfdmParams p;
    p.n_data = 1;
    sc.ofdm = p;
    sc.stimulus.kind = Stimulus::Kind::ofdm;
    sc.explicit_weights = std::vector<cplx>(8, cplx(0.5, -0.25));
    sc.calibration = CalibrationSet{std::vector<cplx>(8, cplx(1.0, 0.0)), 0};
    sc.calibration->constants[3] = cplx(0.8, 0.1);
    sc.seed = 1234567890123ULL;
    sc.sweep_grid = {-45, 45, 0.25};

    const auto j = scenario_to_json(sc);
    const auto back = scenario_from_json(j);
    EXPECT_EQ(scenario_to_json(back), j);
    EXPECT_EQ(back.seed, sc.seed);
    EXPECT_EQ(*back.explicit_weights, *sc.explicit_weights);
    EXPECT_EQ(back.frontend.chain.stages.size(), 5u);
    EXPECT_TRUE(back.frontend.chain.stages[4].is_adjustable());
    EXPECT_TRUE(back.frontend.chain.stages[1].frequency_converter);
    EXPECT_TRUE(back.frontend.chain.stages[2].is_passive());
}

TEST(ScenarioJson, PartialFileKeepsDefaults)
{
    const auto sc = scenario_from_json(json::parse(R"({"geometry": {"n_elements": 8}, "seed": 9})"));
    EXPECT_EQ(sc.geometry.n_elements, 8u);
    EXPECT_EQ(sc.seed, 9u);
    EXPECT_DOUBLE_EQ(sc.geometry.spacing_wavelengths, 0.75);
    EXPECT_EQ(sc.frontend.chain.stages.size(), 5u);
}

TEST(ScenarioJson, UnknownKeysRejected)
{
    EXPECT_THROW(scenario_from_json(json::parse(R"({"geometri": {}})")), InputError);
    EXPECT_THROW(scenario_from_json(json::parse(R"({"geometry": {"n_element": 4}})")), InputError);
    EXPECT_THROW(scenario_from_json(json::parse(R"({"frontend": {"chain": {"stages": [{"gain": 1}]}}})")),
                 InputError);
}

TEST(ScenarioJson, TypeAndRangeErrorsAreInputErrors)
{
    EXPECT_THROW(scenario_from_json(json::parse(R"({"seed": "x"})")), InputError);
    EXPECT_THROW(scenario_from_json(json::parse(R"({"taper": {"kind": "cosine"}})")), InputError);
    EXPECT_THROW(scenario_from_json(json::parse(R"({"frontend": {"chain": {"vga_setting_db": 20}}})")), InputError);
    EXPECT_THROW(scenario_from_json(json::parse(R"({"sweep": {"grid": "0:10"}})")), InputError);
    EXPECT_THROW(scenario_from_json(json::parse(R"([1, 2])")), InputError);
}

TEST(Overrides, DottedPathsAndTypes)
{
    json j = json::object();
    apply_override(j, "frontend.chain.vga_setting_db=-15");
    apply_override(j, "taper.kind=uniform");
    apply_override(j, "frontend.noise=false");
    EXPECT_EQ(j["frontend"]["chain"]["vga_setting_db"], -15);
    EXPECT_EQ(j["taper"]["kind"], "uniform");
    EXPECT_EQ(j["frontend"]["noise"], false);
    const auto sc = scenario_from_json(j);
    EXPECT_DOUBLE_EQ(sc.frontend.chain.vga_setting_db, -15.0);
    EXPECT_FALSE(sc.frontend.noise);

    EXPECT_THROW(apply_override(j, "novalue"), InputError);
    EXPECT_THROW(apply_override(j, "a..b=1"), InputError);
}

TEST(Overrides, ReserializedScenarioReproducesOverride)
{
    json j = json::object();
    apply_override(j, "requirement.nf_max_db=2.0");
    const auto sc = scenario_from_json(j);
    EXPECT_EQ(scenario_from_json(scenario_to_json(sc)).requirement.nf_max_db, 2.0);
}

TEST(CalibrationJson, RoundTripAndValidation)
{
    const CalibrationSet cal{{cplx(1.0, 0.0), cplx(0.5, -0.5), cplx(-0.1, 2.0)}, 0};
    const auto back = calibration_from_json(calibration_to_json(cal));
    EXPECT_EQ(back.constants, cal.constants);
    EXPECT_EQ(back.reference_index, 0u);
    EXPECT_THROW(calibration_from_json(json::parse(R"({"reference_index": 0, "channels": [{"alpha": 0.9, "beta": 0}]})")),
                 InputError);
    EXPECT_THROW(calibration_from_json(json::parse(R"({"reference_index": 0})")), InputError);
}

TEST(BudgetJson, FieldsAndTable)
{
    const auto r = budget_report(ChainSpec::reference_chain(), {}, {});
    const auto j = budget_to_json(r);
    EXPECT_EQ(j["pass"], true);
    EXPECT_NEAR(j["cascade_mid_band"]["gain_db"].get<double>(), 69.75, 1e-9);
    const auto table = budget_table(r, {});
    EXPECT_NE(table.find("Cascade NF"), std::string::npos);
    EXPECT_NE(table.find("PASS"), std::string::npos);
}

TEST(Csv, PatternColumnsAndInfinity)
{
    Pattern p{{-1.0, 0.0, 1.0}, {-3.0, 0.0, -std::numeric_limits<double>::infinity()}};
    std::ostringstream os;
    io::write_pattern_csv(os, p);
    EXPECT_EQ(os.str(), "angle_deg,magnitude_db\n-1,-3\n0,0\n1,-inf\n");

    const auto path = scratch("sweep.csv");
    io::write_sweep_csv(path, p);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "doa_deg,energy_db");
}

TEST(Csv, ConstellationAndBer)
{
    const auto cpath = scratch("constellation.csv");
    const std::vector<cplx> pts{{0.1, -0.2}};
    const std::vector<std::size_t> dec{42};
    io::write_constellation_csv(cpath, pts, dec);
    std::ifstream c(cpath);
    std::string line;
    std::getline(c, line);
    EXPECT_EQ(line, "re,im,decided_symbol");
    std::getline(c, line);
    EXPECT_EQ(line, "0.1,-0.2,42");

    const auto bpath = scratch("ber.csv");
    const std::vector<io::BerRow> rows{{17.8, 1e-5, 0.03}};
    io::write_ber_csv(bpath, rows);
    std::ifstream b(bpath);
    std::getline(b, line);
    EXPECT_EQ(line, "ebn0_db,ber,evm");
}

TEST(IqDump, RoundTripThroughFloat32)
{
    const auto s = make_tone(1e6, 100e6, -20.0, 0.5, 1000).with_center(300e6);
    const auto path = scratch("ch0.cf32");
    io::write_iq(path, s);
    EXPECT_EQ(std::filesystem::file_size(path), 8000u);
    const auto back = io::read_iq(path);
    EXPECT_EQ(back.size(), s.size());
    EXPECT_DOUBLE_EQ(back.sample_rate(), 100e6);
    EXPECT_DOUBLE_EQ(back.center_freq(), 300e6);
    for (std::size_t i = 0; i < s.size(); ++i)
        EXPECT_NEAR(std::abs(back[i] - s[i]), 0.0, 1e-7 * std::abs(s[i]) + 1e-12);

    // First I sample, little-endian float32.
    std::ifstream f(path, std::ios::binary);
    unsigned char raw[4];
    f.read(reinterpret_cast<char *>(raw), 4);
    const std::uint32_t bits = raw[0] | (raw[1] << 8) | (raw[2] << 16) | (static_cast<std::uint32_t>(raw[3]) << 24);
    EXPECT_EQ(std::bit_cast<float>(bits), static_cast<float>(s[0].real()));
}
