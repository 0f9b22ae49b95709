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

// mmrx: command-line front end for the receiver simulator.
//
// Exit codes: 0 ok, 2 input error (bad flags, unreadable or invalid scenario),
// 3 requirement failure, 1 unexpected internal error.

#include "mmrx/io.hpp"
#include "mmrx/scenario.hpp"
#include "mmrx/serialize.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using mmrx::json;

namespace
{
    constexpr int kExitOk = 0;
    constexpr int kExitInternal = 1;
    constexpr int kExitInput = 2;
    constexpr int kExitRequirement = 3;

    struct Options
    {
        std::string scenario_path;
        std::string out_dir;
        std::vector<std::string> overrides;
        std::optional<std::uint64_t> seed;
        std::string grid;
        std::string taper;
        std::optional<double> steer_deg;
        std::string ebn0_grid;
        std::size_t ber_bits = 1'000'000;
    };

    std::string to_hex(const unsigned char *p, unsigned n)
    {
        std::ostringstream os;
        for (unsigned i = 0; i < n; ++i)
            os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(p[i]);
        return os.str();
    }

    std::string sha256(const std::string &data)
    {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned len = 0;
        if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256 failed");
        return to_hex(md, len);
    }

    std::string file_sha256(const fs::path &p)
    {
        std::ifstream f(p, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot read " + p.string());
        std::ostringstream buf;
        buf << f.rdbuf();
        return sha256(buf.str());
    }

    /// Output directory plus the list of files written into it, turned into
    /// manifest.json at the end of a run.
    class RunContext
    {
    public:
        RunContext(std::string command, json scenario, mmrx::Scenario sc, const std::string &out_dir)
            : command_(std::move(command)), scenario_json_(std::move(scenario)), sc_(std::move(sc))
        {
            config_hash_ = sha256(scenario_json_.dump());
            if (!out_dir.empty())
                dir_ = out_dir;
            else
            {
                const char *root = std::getenv("MMRX_OUT_ROOT");
                dir_ = fs::path(root && *root ? root : "mmrx-out") / (command_ + "-" + config_hash_.substr(0, 12));
            }
            fs::create_directories(dir_);
            mmrx::io::write_json(path("scenario.json"), scenario_json_);
        }

        const mmrx::Scenario &scenario() const { return sc_; }
        const fs::path &dir() const { return dir_; }

        fs::path path(const std::string &name)
        {
            outputs_.push_back(name);
            return dir_ / name;
        }

        void finish(const json &status)
        {
            json files = json::array();
            for (const auto &name : outputs_)
                files.push_back({{"path", name}, {"sha256", file_sha256(dir_ / name)}});
            const json manifest{{"tool", "mmrx"},
                                {"version", MMRX_VERSION},
                                {"command", command_},
                                {"seed", sc_.seed},
                                {"config_hash", config_hash_},
                                {"scenario", scenario_json_},
                                {"status", status},
                                {"outputs", files}};
            mmrx::io::write_json(dir_ / "manifest.json", manifest);
        }

    private:
        std::string command_;
        json scenario_json_;
        mmrx::Scenario sc_;
        std::string config_hash_;
        fs::path dir_;
        std::vector<std::string> outputs_;
    };

    json load_scenario_json(const Options &opt)
    {
        json j = json::object();
        if (!opt.scenario_path.empty())
        {
            std::ifstream f(opt.scenario_path);
            if (!f)
                throw mmrx::InputError("cannot open scenario file " + opt.scenario_path);
            try
            {
                j = json::parse(f);
            }
            catch (const json::parse_error &e)
            {
                throw mmrx::InputError(opt.scenario_path + ": " + e.what());
            }
        }
        for (const auto &o : opt.overrides)
            mmrx::apply_override(j, o);
        if (opt.seed)
            j["seed"] = *opt.seed;
        if (!opt.grid.empty())
            j["sweep"]["grid"] = opt.grid;
        return j;
    }

    /// Parses and validates the scenario, then re-serializes it so the
    /// manifest records every resolved default.
    RunContext open_run(const std::string &command, const Options &opt)
    {
        auto sc = mmrx::scenario_from_json(load_scenario_json(opt));
        auto resolved = mmrx::scenario_to_json(sc);
        return RunContext(command, std::move(resolved), std::move(sc), opt.out_dir);
    }

    mmrx::TaperSpec parse_taper(const std::string &text)
    {
        if (text == "uniform")
            return mmrx::TaperSpec::uniform();
        const std::string prefix = "pedestal:";
        if (text.rfind(prefix, 0) == 0)
        {
            try
            {
                std::size_t used = 0;
                const std::string value = text.substr(prefix.size());
                const double db = std::stod(value, &used);
                if (used == value.size())
                {
                    const auto t = mmrx::TaperSpec::pedestal(db);
                    t.validate();
                    return t;
                }
            }
            catch (const std::logic_error &)
            {
            }
        }
        throw mmrx::InputError("--taper expects 'uniform' or 'pedestal:<dB <= 0>', got '" + text + "'");
    }

    json optional_json(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

    json calibration_block(const mmrx::CalibrationSet &cal) { return mmrx::calibration_to_json(cal); }

    // ---- subcommands --------------------------------------------------------

    int cmd_budget(RunContext &run, bool quiet = false)
    {
        const auto &sc = run.scenario();
        const auto report = mmrx::run_budget(sc);
        const auto j = mmrx::budget_to_json(report);
        mmrx::io::write_json(run.path("budget.json"), j);
        {
            auto f = mmrx::io::open_output(run.path("budget.txt"));
            f << mmrx::budget_table(report, sc.requirement);
        }
        if (!quiet)
        {
            std::cout << j.dump(2) << '\n' << mmrx::budget_table(report, sc.requirement);
            for (const auto &msg : report.failures)
                std::cout << "FAIL: " << msg << '\n';
        }
        return report.pass() ? kExitOk : kExitRequirement;
    }

    json pattern_metrics(const mmrx::Pattern &p)
    {
        json m{{"peak_deg", mmrx::peak_angle(p)},
               {"sidelobe_level_db", optional_json(mmrx::sidelobe_level(p))},
               {"edge_level_db", optional_json(mmrx::edge_level(p))}};
        try
        {
            m["beamwidth_3db_deg"] = mmrx::beamwidth_3db(p);
        }
        catch (const mmrx::PatternError &)
        {
            m["beamwidth_3db_deg"] = nullptr;
        }
        return m;
    }

    int cmd_pattern(RunContext &run, const Options &opt)
    {
        const auto &sc = run.scenario();
        const auto taper = opt.taper.empty() ? sc.taper : parse_taper(opt.taper);
        const auto w = opt.steer_deg ? mmrx::BeamWeights::steer(sc.geometry, *opt.steer_deg, sc.stimulus.rf_freq)
                                     : sc.weights();
        const auto amplitudes = mmrx::taper_amplitudes(sc.geometry.n_elements, taper);
        const auto p =
            mmrx::array_factor(sc.geometry, amplitudes, w.weights, sc.sweep_grid.points(), sc.stimulus.rf_freq);
        mmrx::io::write_pattern_csv(run.path("pattern.csv"), p);

        auto metrics = pattern_metrics(p);
        metrics["steer_deg"] = w.target_angle_deg;
        metrics["n_elements"] = sc.geometry.n_elements;
        mmrx::io::write_json(run.path("pattern_metrics.json"), metrics);

        const auto sll = mmrx::sidelobe_level(p);
        std::cout << "peak " << metrics["peak_deg"].get<double>() << " deg, SLL "
                  << (sll ? std::to_string(*sll) + " dB" : std::string("none")) << '\n';
        return kExitOk;
    }

    int cmd_sweep(RunContext &run)
    {
        const auto r = mmrx::run_beam_sweep(run.scenario());
        mmrx::io::write_sweep_csv(run.path("sweep.csv"), r.measured);
        mmrx::io::write_pattern_csv(run.path("sweep_analytic.csv"), r.analytic);
        mmrx::io::write_json(run.path("sweep_calibration.json"), calibration_block(r.calibration));
        const json metrics{{"measured_peak_deg", r.measured_peak_deg},
                           {"analytic_peak_deg", r.analytic_peak_deg},
                           {"max_deviation_db", r.max_deviation_db},
                           {"clipped_samples", r.clipped_samples},
                           {"measured", pattern_metrics(r.measured)}};
        mmrx::io::write_json(run.path("sweep_metrics.json"), metrics);
        std::cout << "measured peak " << r.measured_peak_deg << " deg, analytic peak " << r.analytic_peak_deg
                  << " deg, max deviation " << r.max_deviation_db << " dB\n";
        return kExitOk;
    }

    int cmd_link(RunContext &run, const Options &opt)
    {
        const auto &sc = run.scenario();
        const auto r = mmrx::run_constellation(sc);
        mmrx::io::write_constellation_csv(run.path("constellation.csv"), r.received, r.decided);
        mmrx::io::write_json(run.path("link_calibration.json"), calibration_block(r.calibration));
        const json report{{"n_symbols", r.n_symbols},
                          {"symbol_errors", r.symbol_errors},
                          {"bit_errors", r.bit_errors},
                          {"evm", r.evm},
                          {"measured_snr_db", r.measured_snr_db},
                          {"predicted_snr_db", r.predicted_snr_db},
                          {"required_snr_db", r.required_snr_db},
                          {"margin_db", r.margin_db()},
                          {"element_input_dbm", r.element_input_dbm},
                          {"clipped_samples", r.clipped_samples},
                          {"budget", mmrx::budget_to_json(r.budget)}};
        mmrx::io::write_json(run.path("link_report.json"), report);

        if (!opt.ebn0_grid.empty())
        {
            const auto grid = mmrx::AngleGrid::parse(opt.ebn0_grid).points();
            mmrx::OfdmParams p = *sc.ofdm;
            std::vector<mmrx::io::BerRow> rows;
            for (std::size_t i = 0; i < grid.size(); ++i)
            {
                const auto b = mmrx::ber_test(p, grid[i], opt.ber_bits, mmrx::derive_seed(sc.seed, 0xbe0 + i));
                rows.push_back({grid[i], b.ber, b.evm});
            }
            mmrx::io::write_ber_csv(run.path("ber.csv"), rows);
        }

        std::cout << r.n_symbols << " symbols, " << r.symbol_errors << " symbol errors, EVM " << 100.0 * r.evm
                  << " %, SNR " << r.measured_snr_db << " dB (predicted " << r.predicted_snr_db << ", required "
                  << r.required_snr_db << ")\n";
        return r.margin_db() >= 0.0 ? kExitOk : kExitRequirement;
    }

    int cmd_calibrate(RunContext &run)
    {
        const auto &sc = run.scenario();
        const auto cal = mmrx::calibrate_scenario(sc, sc.adc.sample_rate);
        const auto j = calibration_block(cal);
        mmrx::io::write_json(run.path("calibration.json"), j);
        std::cout << j.dump(2) << '\n';
        return kExitOk;
    }

    int cmd_run(RunContext &run, const Options &opt)
    {
        // The stimulus picks the end-to-end run: a tone drives the beam
        // sweep, an OFDM waveform drives the constellation.
        int status = cmd_budget(run, true);
        cmd_pattern(run, opt);
        if (run.scenario().stimulus.kind == mmrx::Stimulus::Kind::tone)
            cmd_sweep(run);
        else if (const int link = cmd_link(run, opt); link != kExitOk)
            status = link;
        return status;
    }

    void add_common(CLI::App *sub, Options &opt)
    {
        sub->add_option("--scenario", opt.scenario_path, "Scenario JSON file (defaults apply when omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out_dir, "Output directory (default: $MMRX_OUT_ROOT/<command>-<hash>)");
        sub->add_option("--set", opt.overrides, "Override a scenario value, dotted.path=value (repeatable)");
        sub->add_option("--seed", opt.seed, "Master seed");
        sub->add_option("--grid", opt.grid, "Angle grid start:stop:step in degrees");
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"mmrx: 28 GHz digital array receiver simulator"};
    app.set_version_flag("--version", MMRX_VERSION);
    app.require_subcommand(1);

    Options opt;
    auto *budget = app.add_subcommand("budget", "Cascade analysis and link budget against the requirements");
    auto *pattern = app.add_subcommand("pattern", "Analytic array factor with sidelobe and beamwidth metrics");
    auto *sweep = app.add_subcommand("sweep", "Full-pipeline beam sweep against the analytic array factor");
    auto *link = app.add_subcommand("link", "Single-subcarrier OFDM constellation through the receiver");
    auto *calibrate = app.add_subcommand("calibrate", "Estimate per-channel calibration constants");
    auto *run = app.add_subcommand("run", "budget and pattern, then sweep (tone) or link (OFDM) in one directory");
    for (auto *sub : {budget, pattern, sweep, link, calibrate, run})
        add_common(sub, opt);
    for (auto *sub : {pattern, run})
    {
        sub->add_option("--taper", opt.taper, "uniform | pedestal:<dB>");
        sub->add_option("--steer", opt.steer_deg, "Steering angle in degrees (default: scenario weights)");
    }
    for (auto *sub : {link, run})
    {
        sub->add_option("--ebn0", opt.ebn0_grid, "Also run an AWGN BER sweep over start:stop:step dB");
        sub->add_option("--ber-bits", opt.ber_bits, "Bits per BER point")->check(CLI::PositiveNumber);
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForVersion &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return kExitInput;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try
    {
        auto ctx = open_run(command, opt);
        int status = kExitOk;
        if (command == "budget")
            status = cmd_budget(ctx);
        else if (command == "pattern")
            status = cmd_pattern(ctx, opt);
        else if (command == "sweep")
            status = cmd_sweep(ctx);
        else if (command == "link")
            status = cmd_link(ctx, opt);
        else if (command == "calibrate")
            status = cmd_calibrate(ctx);
        else
            status = cmd_run(ctx, opt);
        ctx.finish({{"exit_code", status}, {"requirements_pass", status == kExitOk}});
        std::cerr << "outputs in " << ctx.dir().string() << '\n';
        return status;
    }
    catch (const mmrx::InputError &e)
    {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInternal;
    }
}
