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

#pragma once

#include "mmrx/scenario.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmrx
{
    using json = nlohmann::json;

    /// Raised for malformed or out-of-range scenario input.
    class InputError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    namespace detail
    {
        // Reads fields of one JSON object, rejecting keys it was never asked about.
        class ObjectReader
        {
        public:
            ObjectReader(const json &j, std::string path) : j_(j), path_(std::move(path))
            {
                if (!j_.is_object())
                    throw InputError(path_ + ": expected an object");
            }

            ~ObjectReader() noexcept(false)
            {
                if (std::uncaught_exceptions() > 0)
                    return;
                for (const auto &[key, _] : j_.items())
                    if (!seen_.count(key))
                        throw InputError(path_ + "." + key + ": unknown key");
            }

            bool has(const std::string &key)
            {
                seen_.insert(key);
                return j_.contains(key) && !j_.at(key).is_null();
            }

            template <typename T>
            void read(const std::string &key, T &out)
            {
                if (!has(key))
                    return;
                try
                {
                    out = j_.at(key).get<T>();
                }
                catch (const json::exception &e)
                {
                    throw InputError(path_ + "." + key + ": " + e.what());
                }
            }

            const json &at(const std::string &key)
            {
                seen_.insert(key);
                return j_.at(key);
            }

            std::string child(const std::string &key) const { return path_ + "." + key; }

        private:
            const json &j_;
            std::string path_;
            std::set<std::string> seen_;
        };

        inline json optional_number(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }
    }

    // ---- calibration ------------------------------------------------------

    inline json calibration_to_json(const CalibrationSet &cal)
    {
        json channels = json::array();
        for (const auto &c : cal.constants)
            channels.push_back({{"alpha", c.real()}, {"beta", c.imag()}});
        return {{"reference_index", cal.reference_index}, {"channels", channels}};
    }

    inline CalibrationSet calibration_from_json(const json &j)
    {
        CalibrationSet cal;
        detail::ObjectReader r(j, "calibration");
        r.read("reference_index", cal.reference_index);
        if (!r.has("channels") || !r.at("channels").is_array())
            throw InputError("calibration.channels: expected an array");
        for (const auto &c : r.at("channels"))
        {
            detail::ObjectReader cr(c, "calibration.channels[]");
            double alpha = 0.0, beta = 0.0;
            if (!cr.has("alpha") || !cr.has("beta"))
                throw InputError("calibration.channels[]: alpha and beta are required");
            cr.read("alpha", alpha);
            cr.read("beta", beta);
            cal.constants.emplace_back(alpha, beta);
        }
        try
        {
            cal.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw InputError(e.what());
        }
        return cal;
    }

    // ---- chain ------------------------------------------------------------

    inline json component_to_json(const ComponentSpec &c)
    {
        json j;
        j["name"] = c.name;
        if (c.gain_start_db == c.gain_end_db)
            j["gain_db"] = c.gain_start_db;
        else
            j["gain_db"] = json::array({c.gain_start_db, c.gain_end_db});
        j["nf_db"] = c.nf_db;
        j["oip3_dbm"] = detail::optional_number(c.oip3_dbm);
        if (c.adjustable_range_db)
            j["adjustable_range_db"] = json::array({c.adjustable_range_db->first, c.adjustable_range_db->second});
        j["frequency_converter"] = c.frequency_converter;
        return j;
    }

    inline ComponentSpec component_from_json(const json &j)
    {
        detail::ObjectReader r(j, "stage");
        ComponentSpec c;
        r.read("name", c.name);
        if (r.has("gain_db"))
        {
            const auto &g = r.at("gain_db");
            if (g.is_number())
                c.gain_start_db = c.gain_end_db = g.get<double>();
            else if (g.is_array() && g.size() == 2)
            {
                c.gain_start_db = g[0].get<double>();
                c.gain_end_db = g[1].get<double>();
            }
            else
                throw InputError("stage.gain_db: expected a number or [band_start, band_end]");
        }
        r.read("nf_db", c.nf_db);
        if (r.has("oip3_dbm"))
            c.oip3_dbm = r.at("oip3_dbm").get<double>();
        if (r.has("adjustable_range_db"))
        {
            const auto &a = r.at("adjustable_range_db");
            if (!a.is_array() || a.size() != 2)
                throw InputError("stage.adjustable_range_db: expected [min, max]");
            c.adjustable_range_db = std::make_pair(a[0].get<double>(), a[1].get<double>());
            c.gain_start_db = c.gain_end_db = c.adjustable_range_db->second;
        }
        r.read("frequency_converter", c.frequency_converter);
        return c;
    }

    inline json chain_to_json(const ChainSpec &c)
    {
        json stages = json::array();
        for (const auto &s : c.stages)
            stages.push_back(component_to_json(s));
        return {{"stages", stages},
                {"vga_setting_db", c.vga_setting_db},
                {"if_band_hz", json::array({c.if_band.start_hz, c.if_band.stop_hz})},
                {"include_balun", c.include_balun},
                {"balun_loss_db", c.balun_loss_db}};
    }

    inline ChainSpec chain_from_json(const json &j, ChainSpec c)
    {
        detail::ObjectReader r(j, "frontend.chain");
        if (r.has("stages"))
        {
            c.stages.clear();
            for (const auto &s : r.at("stages"))
                c.stages.push_back(component_from_json(s));
        }
        r.read("vga_setting_db", c.vga_setting_db);
        if (r.has("if_band_hz"))
        {
            const auto &b = r.at("if_band_hz");
            if (!b.is_array() || b.size() != 2)
                throw InputError("frontend.chain.if_band_hz: expected [start, stop]");
            c.if_band = {b[0].get<double>(), b[1].get<double>()};
        }
        r.read("include_balun", c.include_balun);
        r.read("balun_loss_db", c.balun_loss_db);
        return c;
    }

    // ---- scenario ---------------------------------------------------------

    inline json ofdm_to_json(const OfdmParams &p)
    {
        return {{"n_fft", p.n_fft},
                {"modulation_order", p.modulation_order},
                {"guard_interval", p.guard_interval},
                {"n_data", p.n_data},
                {"subcarrier_spacing_hz", p.subcarrier_spacing}};
    }

    inline OfdmParams ofdm_from_json(const json &j)
    {
        OfdmParams p;
        detail::ObjectReader r(j, "ofdm");
        r.read("n_fft", p.n_fft);
        r.read("modulation_order", p.modulation_order);
        r.read("guard_interval", p.guard_interval);
        r.read("n_data", p.n_data);
        r.read("subcarrier_spacing_hz", p.subcarrier_spacing);
        return p;
    }

    inline std::string grid_to_string(const AngleGrid &g)
    {
        std::ostringstream os;
        os << std::setprecision(17) << g.start << ':' << g.stop << ':' << g.step;
        return os.str();
    }

    inline json scenario_to_json(const Scenario &sc)
    {
        json j;
        j["geometry"] = {{"n_elements", sc.geometry.n_elements},
                         {"spacing_wavelengths", sc.geometry.spacing_wavelengths},
                         {"design_freq_hz", sc.geometry.design_freq}};
        j["taper"] = {{"kind", sc.taper.kind == TaperSpec::Kind::uniform ? "uniform" : "linear_pedestal"},
                      {"pedestal_db", sc.taper.pedestal_db}};
        j["element_pattern"] = {{"cos_exponent", sc.element_pattern.cos_exponent}};
        const auto &fe = sc.frontend;
        j["frontend"] = {{"chain", chain_to_json(fe.chain)},
                         {"lo_freq_hz", fe.lo_freq},
                         {"rf_center_hz", fe.rf_center},
                         {"noise", fe.noise},
                         {"source_noise", fe.source_noise},
                         {"nonlinear", fe.nonlinear},
                         {"per_channel_seeds", fe.per_channel_seeds},
                         {"noise_bandwidth_hz", fe.noise_bandwidth_hz},
                         {"temperature_k", fe.temperature_k}};
        if (!sc.mismatch.explicit_values.empty())
        {
            json values = json::array();
            for (const auto &m : sc.mismatch.explicit_values)
                values.push_back({{"gain_db", m.gain_db}, {"phase_deg", m.phase_deg}});
            j["mismatch"] = {{"values", values}};
        }
        else
            j["mismatch"] = {{"random", {{"gain_db", sc.mismatch.random_gain_db},
                                         {"phase_deg", sc.mismatch.random_phase_deg}}}};
        j["adc"] = {{"sample_rate_hz", sc.adc.sample_rate},
                    {"resolution_bits", sc.adc.resolution_bits},
                    {"full_scale_dbm", sc.adc.full_scale_dbm},
                    {"ideal", sc.adc.ideal},
                    {"lanes", sc.adc.lanes}};
        j["ofdm"] = sc.ofdm ? ofdm_to_json(*sc.ofdm) : json(nullptr);
        j["stimulus"] = {{"kind", sc.stimulus.kind == Stimulus::Kind::tone ? "tone" : "ofdm"},
                         {"rf_freq_hz", sc.stimulus.rf_freq},
                         {"power_dbm", sc.stimulus.power_dbm},
                         {"doa_deg", sc.stimulus.doa_deg}};
        j["weights"] = {{"angle_deg", sc.weights_angle_deg}};
        if (sc.explicit_weights)
        {
            json values = json::array();
            for (const auto &w : *sc.explicit_weights)
                values.push_back(json::array({w.real(), w.imag()}));
            j["weights"]["values"] = values;
        }
        j["seed"] = sc.seed;
        const auto &rq = sc.requirement;
        j["requirement"] = {{"ebn0_db", rq.ebn0_db},
                            {"nf_max_db", rq.nf_max_db},
                            {"gain_min_db", rq.gain_min_db},
                            {"element_gain_db", rq.element_gain_db},
                            {"input_level_dbm", rq.input_level_dbm},
                            {"channel_bandwidth_hz", rq.channel_bandwidth_hz}};
        j["calibration"] = {{"enabled", sc.calibrate},
                            {"reference_index", sc.reference_index},
                            {"reference_power_dbm", sc.calibration_reference_dbm},
                            {"constants", sc.calibration ? calibration_to_json(*sc.calibration) : json(nullptr)}};
        j["capture_samples"] = sc.capture_samples;
        j["link_symbols"] = sc.link_symbols;
        j["sweep"] = {{"grid", grid_to_string(sc.sweep_grid)}};
        return j;
    }

    /// Builds a scenario from `j`; absent keys keep their defaults, unknown
    /// keys are rejected. Throws InputError on any problem, including
    /// validation failures.
    inline Scenario scenario_from_json(const json &j)
    {
        Scenario sc;
        try
        {
            detail::ObjectReader r(j, "scenario");
            if (r.has("geometry"))
            {
                detail::ObjectReader g(r.at("geometry"), "geometry");
                g.read("n_elements", sc.geometry.n_elements);
                g.read("spacing_wavelengths", sc.geometry.spacing_wavelengths);
                g.read("design_freq_hz", sc.geometry.design_freq);
            }
            if (r.has("taper"))
            {
                detail::ObjectReader t(r.at("taper"), "taper");
                std::string kind = "linear_pedestal";
                t.read("kind", kind);
                if (kind == "uniform")
                    sc.taper.kind = TaperSpec::Kind::uniform;
                else if (kind == "linear_pedestal")
                    sc.taper.kind = TaperSpec::Kind::linear_pedestal;
                else
                    throw InputError("taper.kind: expected 'uniform' or 'linear_pedestal'");
                t.read("pedestal_db", sc.taper.pedestal_db);
            }
            if (r.has("element_pattern"))
            {
                detail::ObjectReader e(r.at("element_pattern"), "element_pattern");
                e.read("cos_exponent", sc.element_pattern.cos_exponent);
            }
            if (r.has("frontend"))
            {
                detail::ObjectReader f(r.at("frontend"), "frontend");
                if (f.has("chain"))
                    sc.frontend.chain = chain_from_json(f.at("chain"), sc.frontend.chain);
                f.read("lo_freq_hz", sc.frontend.lo_freq);
                f.read("rf_center_hz", sc.frontend.rf_center);
                f.read("noise", sc.frontend.noise);
                f.read("source_noise", sc.frontend.source_noise);
                f.read("nonlinear", sc.frontend.nonlinear);
                f.read("per_channel_seeds", sc.frontend.per_channel_seeds);
                f.read("noise_bandwidth_hz", sc.frontend.noise_bandwidth_hz);
                f.read("temperature_k", sc.frontend.temperature_k);
            }
            if (r.has("mismatch"))
            {
                detail::ObjectReader m(r.at("mismatch"), "mismatch");
                if (m.has("values"))
                {
                    for (const auto &v : m.at("values"))
                    {
                        detail::ObjectReader mv(v, "mismatch.values[]");
                        ChannelMismatch cm;
                        mv.read("gain_db", cm.gain_db);
                        mv.read("phase_deg", cm.phase_deg);
                        sc.mismatch.explicit_values.push_back(cm);
                    }
                }
                if (m.has("random"))
                {
                    detail::ObjectReader mr(m.at("random"), "mismatch.random");
                    mr.read("gain_db", sc.mismatch.random_gain_db);
                    mr.read("phase_deg", sc.mismatch.random_phase_deg);
                }
            }
            if (r.has("adc"))
            {
                detail::ObjectReader a(r.at("adc"), "adc");
                a.read("sample_rate_hz", sc.adc.sample_rate);
                a.read("resolution_bits", sc.adc.resolution_bits);
                a.read("full_scale_dbm", sc.adc.full_scale_dbm);
                a.read("ideal", sc.adc.ideal);
                a.read("lanes", sc.adc.lanes);
            }
            if (r.has("ofdm"))
                sc.ofdm = ofdm_from_json(r.at("ofdm"));
            if (r.has("stimulus"))
            {
                detail::ObjectReader s(r.at("stimulus"), "stimulus");
                std::string kind = "tone";
                s.read("kind", kind);
                if (kind == "tone")
                    sc.stimulus.kind = Stimulus::Kind::tone;
                else if (kind == "ofdm")
                    sc.stimulus.kind = Stimulus::Kind::ofdm;
                else
                    throw InputError("stimulus.kind: expected 'tone' or 'ofdm'");
                s.read("rf_freq_hz", sc.stimulus.rf_freq);
                s.read("power_dbm", sc.stimulus.power_dbm);
                s.read("doa_deg", sc.stimulus.doa_deg);
            }
            if (r.has("weights"))
            {
                detail::ObjectReader w(r.at("weights"), "weights");
                w.read("angle_deg", sc.weights_angle_deg);
                if (w.has("values"))
                {
                    std::vector<cplx> values;
                    for (const auto &v : w.at("values"))
                    {
                        if (!v.is_array() || v.size() != 2)
                            throw InputError("weights.values[]: expected [re, im]");
                        values.emplace_back(v[0].get<double>(), v[1].get<double>());
                    }
                    sc.explicit_weights = std::move(values);
                }
            }
            r.read("seed", sc.seed);
            if (r.has("requirement"))
            {
                detail::ObjectReader q(r.at("requirement"), "requirement");
                q.read("ebn0_db", sc.requirement.ebn0_db);
                q.read("nf_max_db", sc.requirement.nf_max_db);
                q.read("gain_min_db", sc.requirement.gain_min_db);
                q.read("element_gain_db", sc.requirement.element_gain_db);
                q.read("input_level_dbm", sc.requirement.input_level_dbm);
                q.read("channel_bandwidth_hz", sc.requirement.channel_bandwidth_hz);
            }
            if (r.has("calibration"))
            {
                detail::ObjectReader c(r.at("calibration"), "calibration");
                c.read("enabled", sc.calibrate);
                c.read("reference_index", sc.reference_index);
                c.read("reference_power_dbm", sc.calibration_reference_dbm);
                if (c.has("constants"))
                    sc.calibration = calibration_from_json(c.at("constants"));
            }
            r.read("capture_samples", sc.capture_samples);
            r.read("link_symbols", sc.link_symbols);
            if (r.has("sweep"))
            {
                detail::ObjectReader s(r.at("sweep"), "sweep");
                if (s.has("grid"))
                    sc.sweep_grid = AngleGrid::parse(s.at("grid").get<std::string>());
            }
        }
        catch (const json::exception &e)
        {
            throw InputError(std::string("scenario: ") + e.what());
        }
        catch (const std::invalid_argument &e)
        {
            throw InputError(std::string("scenario: ") + e.what());
        }

        try
        {
            sc.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw InputError(e.what());
        }
        return sc;
    }

    /// Applies a dotted-path override such as "frontend.chain.vga_setting_db=-15".
    /// The value is parsed as JSON when possible, otherwise taken as a string.
    inline void apply_override(json &j, const std::string &assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0)
            throw InputError("override '" + assignment + "': expected key=value");
        const std::string path = assignment.substr(0, eq);
        const std::string text = assignment.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded())
            value = text;

        json *node = &j;
        std::size_t start = 0;
        while (true)
        {
            const auto dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (key.empty())
                throw InputError("override '" + assignment + "': empty path component");
            if (!node->is_object())
                *node = json::object();
            if (dot == std::string::npos)
            {
                (*node)[key] = value;
                return;
            }
            node = &(*node)[key];
            start = dot + 1;
        }
    }

    // ---- reports ----------------------------------------------------------

    inline json cascade_to_json(const CascadeResult &c)
    {
        return {{"gain_db", c.gain_db}, {"nf_db", c.nf_db}, {"oip3_dbm", detail::optional_number(c.oip3_dbm)}};
    }

    inline json budget_to_json(const BudgetReport &b)
    {
        return {{"data_rate_bps", b.data_rate_bps},
                {"required_snr_db", b.required_snr_db},
                {"occupied_bandwidth_hz", b.occupied_bandwidth_hz},
                {"mid_band_hz", b.mid_band_hz},
                {"cascade_band_start", cascade_to_json(b.band_start)},
                {"cascade_mid_band", cascade_to_json(b.mid_band)},
                {"cascade_band_end", cascade_to_json(b.band_end)},
                {"sensitivity_dbm", b.sensitivity_dbm},
                {"element_input_dbm", b.element_input_dbm},
                {"nf_pass", b.nf_pass},
                {"gain_pass", b.gain_pass},
                {"pass", b.pass()},
                {"failures", b.failures}};
    }

    inline std::string budget_table(const BudgetReport &b, const LinkRequirement &req)
    {
        std::ostringstream os;
        os << std::fixed << std::setprecision(2);
        os << "Data rate               " << b.data_rate_bps / 1e9 << " Gbps\n";
        os << "Occupied bandwidth      " << b.occupied_bandwidth_hz / 1e6 << " MHz\n";
        os << "Required SNR            " << b.required_snr_db << " dB\n";
        os << "                        band start   mid band   band end\n";
        os << "Cascade gain (dB)       " << std::setw(10) << b.band_start.gain_db << std::setw(11)
           << b.mid_band.gain_db << std::setw(11) << b.band_end.gain_db << '\n';
        os << "Cascade NF (dB)         " << std::setw(10) << b.band_start.nf_db << std::setw(11) << b.mid_band.nf_db
           << std::setw(11) << b.band_end.nf_db << '\n';
        auto oip3 = [](const CascadeResult &c) { return c.oip3_dbm ? *c.oip3_dbm : 0.0; };
        os << "Cascade OIP3 (dBm)      " << std::setw(10) << oip3(b.band_start) << std::setw(11) << oip3(b.mid_band)
           << std::setw(11) << oip3(b.band_end) << '\n';
        os << "Sensitivity             " << b.sensitivity_dbm << " dBm\n";
        os << "Element input           " << b.element_input_dbm << " dBm\n";
        os << "NF requirement          " << (b.nf_pass ? "PASS" : "FAIL") << " (" << b.mid_band.nf_db
           << " <= " << req.nf_max_db << " dB)\n";
        os << "Gain requirement        " << (b.gain_pass ? "PASS" : "FAIL") << " (" << b.mid_band.gain_db
           << " >= " << req.gain_min_db << " dB)\n";
        return os.str();
    }
}
