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

#include "mmrx/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmrx
{
    struct OfdmParams
    {
        std::size_t n_fft = 512;
        std::size_t modulation_order = 64;
        double guard_interval = 0.125;
        std::size_t n_data = 336;
        double subcarrier_spacing = 1.65e6;

        /// Checks used by the link arithmetic: any power-of-two M >= 2 and
        /// 1 <= N_D <= N_FFT.
        void validate() const
        {
            if (modulation_order < 2 || (modulation_order & (modulation_order - 1)) != 0)
                throw std::invalid_argument("OfdmParams: modulation order must be a power of two >= 2");
            if (n_fft == 0 || n_data < 1 || n_data > n_fft)
                throw std::invalid_argument("OfdmParams: need 1 <= n_data <= n_fft");
            if (!(guard_interval >= 0.0) || !std::isfinite(guard_interval))
                throw std::invalid_argument("OfdmParams: guard interval must be >= 0");
            if (!(subcarrier_spacing > 0.0) || !std::isfinite(subcarrier_spacing))
                throw std::invalid_argument("OfdmParams: subcarrier spacing must be positive");
        }

        /// Stricter checks for the modem: square QAM and the DC bin left empty.
        void validate_modem() const
        {
            validate();
            const auto m = modulation_order;
            if (m != 4 && m != 16 && m != 64 && m != 256 && m != 1024)
                throw std::invalid_argument("OfdmParams: modulation order must be square QAM in {4,16,64,256,1024}");
            if (n_data > n_fft - 1)
                throw std::invalid_argument("OfdmParams: n_data must leave the DC bin unused");
            (void)cyclic_prefix_length();
        }

        double bits_per_symbol() const { return std::log2(static_cast<double>(modulation_order)); }
        double sample_rate() const { return static_cast<double>(n_fft) * subcarrier_spacing; }
        double occupied_bandwidth() const { return static_cast<double>(n_data) * subcarrier_spacing; }

        std::size_t cyclic_prefix_length() const
        {
            const double cp = guard_interval * static_cast<double>(n_fft);
            if (std::abs(cp - std::round(cp)) > 1e-9)
                throw std::invalid_argument("OfdmParams: guard_interval * n_fft must be an integer");
            return static_cast<std::size_t>(std::llround(cp));
        }
    };

    /// log2(M) * N_D * CS / (1 + GI), in bit/s.
    inline double ofdm_data_rate(const OfdmParams &p)
    {
        p.validate();
        return p.bits_per_symbol() * static_cast<double>(p.n_data) * p.subcarrier_spacing / (1.0 + p.guard_interval);
    }

    /// SNR over the full FFT bandwidth needed to reach `ebn0_db`; the guard
    /// interval counts as overhead.
    inline double required_snr(const OfdmParams &p, double ebn0_db)
    {
        p.validate();
        const double ratio = p.bits_per_symbol() * static_cast<double>(p.n_data) /
                             ((1.0 + p.guard_interval) * static_cast<double>(p.n_fft));
        return ebn0_db + 10.0 * std::log10(ratio);
    }

    struct IfBand
    {
        double start_hz = 0.15e9;
        double stop_hz = 1.0e9;

        bool contains(double f) const { return f >= start_hz - 1e-6 && f <= stop_hz + 1e-6; }
        double center() const { return 0.5 * (start_hz + stop_hz); }
    };

    /// One receiver stage. A frequency-dependent gain is given by its values at
    /// the start and end of the IF band (linear in dB between them); an
    /// adjustable stage (VGA) takes its gain from the chain setting instead.
    struct ComponentSpec
    {
        std::string name;
        double gain_start_db = 0.0;
        double gain_end_db = 0.0;
        double nf_db = 0.0;
        std::optional<double> oip3_dbm;
        std::optional<std::pair<double, double>> adjustable_range_db;
        bool frequency_converter = false; // RF-to-IF translation happens at this stage's input

        static ComponentSpec fixed(std::string name, double gain_db, double nf_db, std::optional<double> oip3_dbm)
        {
            return {std::move(name), gain_db, gain_db, nf_db, oip3_dbm, std::nullopt, false};
        }

        static ComponentSpec sloped(std::string name, double gain_start_db, double gain_end_db, double nf_db,
                                    std::optional<double> oip3_dbm)
        {
            return {std::move(name), gain_start_db, gain_end_db, nf_db, oip3_dbm, std::nullopt, false};
        }

        static ComponentSpec adjustable(std::string name, double min_db, double max_db, double nf_db,
                                        std::optional<double> oip3_dbm)
        {
            return {std::move(name), max_db, max_db, nf_db, oip3_dbm, std::make_pair(min_db, max_db), false};
        }

        static ComponentSpec passive(std::string name, double loss_db)
        {
            return {std::move(name), -loss_db, -loss_db, loss_db, std::nullopt, std::nullopt, false};
        }

        bool is_adjustable() const noexcept { return adjustable_range_db.has_value(); }
        bool is_passive() const noexcept { return !oip3_dbm && gain_start_db < 0.0 && gain_end_db < 0.0; }

        void validate() const
        {
            if (!std::isfinite(gain_start_db) || !std::isfinite(gain_end_db))
                throw std::invalid_argument("ComponentSpec '" + name + "': zero linear gain (-inf dB) is not allowed");
            if (!(nf_db >= 0.0) || !std::isfinite(nf_db))
                throw std::invalid_argument("ComponentSpec '" + name + "': noise figure must be >= 0 dB");
            if (oip3_dbm && !std::isfinite(*oip3_dbm))
                throw std::invalid_argument("ComponentSpec '" + name + "': OIP3 must be finite");
            if (adjustable_range_db && !(adjustable_range_db->first <= adjustable_range_db->second))
                throw std::invalid_argument("ComponentSpec '" + name + "': adjustable range must be ordered");
            if (is_passive() && std::abs(nf_db + gain_start_db) > 1e-9)
                throw std::invalid_argument("ComponentSpec '" + name + "': passive stage needs NF equal to its loss");
        }

        /// Gain at IF frequency `if_freq`; `setting_db` applies to adjustable stages.
        double gain_at(double if_freq, const IfBand &band, double setting_db) const
        {
            if (adjustable_range_db)
            {
                const auto [lo, hi] = *adjustable_range_db;
                if (setting_db < lo - 1e-12 || setting_db > hi + 1e-12)
                    throw std::invalid_argument("ComponentSpec '" + name + "': setting outside adjustable range");
                return setting_db;
            }
            if (gain_start_db == gain_end_db)
                return gain_start_db;
            const double t = (if_freq - band.start_hz) / (band.stop_hz - band.start_hz);
            return gain_start_db + (gain_end_db - gain_start_db) * std::clamp(t, 0.0, 1.0);
        }
    };

    /// Stage values resolved at one frequency and setting.
    struct StageValues
    {
        std::string name;
        double gain_db = 0.0;
        double nf_db = 0.0;
        std::optional<double> oip3_dbm;
        bool frequency_converter = false;
    };

    struct ChainSpec
    {
        std::vector<ComponentSpec> stages;
        double vga_setting_db = 15.0;
        IfBand if_band;
        bool include_balun = false;
        double balun_loss_db = 1.0;

        void validate() const
        {
            if (stages.empty())
                throw std::invalid_argument("ChainSpec: chain has no stages");
            for (const auto &s : stages)
            {
                s.validate();
                if (s.is_adjustable())
                    (void)s.gain_at(if_band.start_hz, if_band, vga_setting_db);
            }
            if (!(if_band.start_hz > 0.0 && if_band.stop_hz > if_band.start_hz))
                throw std::invalid_argument("ChainSpec: IF band must be a positive, increasing range");
        }

        /// All stages, plus the optional trailing balun, resolved at `if_freq`.
        std::vector<StageValues> resolve(double if_freq) const
        {
            validate();
            std::vector<StageValues> out;
            out.reserve(stages.size() + 1);
            for (const auto &s : stages)
                out.push_back({s.name, s.gain_at(if_freq, if_band, vga_setting_db), s.nf_db, s.oip3_dbm,
                               s.frequency_converter});
            if (include_balun)
                out.push_back({"balun", -balun_loss_db, balun_loss_db, std::nullopt, false});
            return out;
        }

        /// The receiver chain as built: LNA (MAAL-011111), IQ downconverter
        /// (HMC1065LP4E), LPF (LFCN-900+), IF amplifier (RAM-8A+), VGA (ADL5331).
        static ChainSpec reference_chain()
        {
            auto mixer = ComponentSpec::fixed("downconverter", 9.0, 3.0, 14.0);
            mixer.frequency_converter = true;
            ChainSpec c;
            c.stages = {
                ComponentSpec::fixed("LNA", 19.0, 2.5, 20.0),
                mixer,
                ComponentSpec::passive("LPF", 1.0),
                ComponentSpec::sloped("IF amplifier", 31.5, 24.0, 2.6, 24.4),
                ComponentSpec::adjustable("VGA", -15.0, 15.0, 9.0, 39.0),
            };
            return c;
        }
    };

    struct CascadeResult
    {
        double gain_db = 0.0;
        double nf_db = 0.0;
        std::optional<double> oip3_dbm; // absent when no stage has an OIP3
    };

    /// Friis cascade in the linear domain. Stages without OIP3 are treated as
    /// linear and contribute only their gain to the OIP3 sum.
    inline CascadeResult cascade(std::span<const StageValues> stages)
    {
        if (stages.empty())
            throw std::invalid_argument("cascade: chain has no stages");
        double gain_db = 0.0;
        double gain_lin = 1.0;
        double f_total = 0.0;
        for (std::size_t k = 0; k < stages.size(); ++k)
        {
            const auto &s = stages[k];
            if (!std::isfinite(s.gain_db))
                throw std::invalid_argument("cascade: stage '" + s.name + "' has zero linear gain");
            const double f = db_to_linear(s.nf_db);
            f_total += (k == 0) ? f : (f - 1.0) / gain_lin;
            gain_lin *= db_to_linear(s.gain_db);
            gain_db += s.gain_db;
        }

        double inv_oip3 = 0.0;
        bool any_oip3 = false;
        double following_gain_db = 0.0;
        for (std::size_t k = stages.size(); k-- > 0;)
        {
            const auto &s = stages[k];
            if (s.oip3_dbm)
            {
                any_oip3 = true;
                inv_oip3 += 1.0 / dbm_to_watts(*s.oip3_dbm + following_gain_db);
            }
            following_gain_db += s.gain_db;
        }

        CascadeResult r;
        r.gain_db = gain_db;
        r.nf_db = linear_to_db(f_total);
        if (any_oip3)
            r.oip3_dbm = watts_to_dbm(1.0 / inv_oip3);
        return r;
    }

    inline CascadeResult cascade_analysis(const ChainSpec &chain, double eval_freq)
    {
        if (!chain.if_band.contains(eval_freq))
            throw std::invalid_argument("cascade_analysis: evaluation frequency outside the IF band");
        const auto stages = chain.resolve(eval_freq);
        return cascade(stages);
    }

    /// Extremes of the cascade over the IF band edges and the adjustable-gain
    /// range: the envelope any physical realization of the chain should
    /// fall inside.
    struct CascadeEnvelope
    {
        double gain_min_db = 0.0;
        double gain_max_db = 0.0;
        double nf_min_db = 0.0;
        double nf_max_db = 0.0;

        bool brackets_gain(double gain_db) const { return gain_db >= gain_min_db && gain_db <= gain_max_db; }
        bool brackets_nf(double nf_db) const { return nf_db >= nf_min_db && nf_db <= nf_max_db; }
    };

    inline CascadeEnvelope cascade_envelope(const ChainSpec &chain)
    {
        std::vector<double> settings{chain.vga_setting_db};
        for (const auto &s : chain.stages)
            if (s.adjustable_range_db)
            {
                settings = {s.adjustable_range_db->first, s.adjustable_range_db->second};
                break;
            }
        CascadeEnvelope env{1e300, -1e300, 1e300, -1e300};
        for (double f : {chain.if_band.start_hz, chain.if_band.stop_hz})
            for (double g : settings)
            {
                ChainSpec c = chain;
                c.vga_setting_db = g;
                const auto r = cascade_analysis(c, f);
                env.gain_min_db = std::min(env.gain_min_db, r.gain_db);
                env.gain_max_db = std::max(env.gain_max_db, r.gain_db);
                env.nf_min_db = std::min(env.nf_min_db, r.nf_db);
                env.nf_max_db = std::max(env.nf_max_db, r.nf_db);
            }
        return env;
    }

    /// Minimum detectable input: kTB floor + NF + required SNR, in dBm.
    inline double sensitivity(double nf_db, double bandwidth_hz, double required_snr_db)
    {
        return thermal_noise_power(bandwidth_hz) + nf_db + required_snr_db;
    }

    struct LinkRequirement
    {
        double ebn0_db = 17.8;
        double nf_max_db = 5.8;
        double gain_min_db = 55.0;
        double element_gain_db = 15.0;
        double input_level_dbm = -85.0;
        double channel_bandwidth_hz = 800e6;

        void validate() const
        {
            for (double v : {ebn0_db, nf_max_db, gain_min_db, element_gain_db, input_level_dbm})
                if (!std::isfinite(v))
                    throw std::invalid_argument("LinkRequirement: values must be finite");
            if (!(channel_bandwidth_hz > 0.0))
                throw std::invalid_argument("LinkRequirement: channel bandwidth must be positive");
        }
    };

    struct BudgetReport
    {
        double data_rate_bps = 0.0;
        double required_snr_db = 0.0;
        double occupied_bandwidth_hz = 0.0;
        double mid_band_hz = 0.0;
        CascadeResult band_start;
        CascadeResult mid_band;
        CascadeResult band_end;
        double sensitivity_dbm = 0.0;
        double element_input_dbm = 0.0; // input level plus element gain
        bool nf_pass = false;
        bool gain_pass = false;
        std::vector<std::string> failures;

        bool pass() const noexcept { return nf_pass && gain_pass; }
    };

    /// Pass/fail is judged on the mid-band cascade.
    inline BudgetReport budget_report(const ChainSpec &chain, const OfdmParams &p, const LinkRequirement &req)
    {
        p.validate();
        req.validate();
        BudgetReport r;
        r.data_rate_bps = ofdm_data_rate(p);
        r.required_snr_db = required_snr(p, req.ebn0_db);
        r.occupied_bandwidth_hz = p.occupied_bandwidth();
        r.mid_band_hz = chain.if_band.center();
        r.band_start = cascade_analysis(chain, chain.if_band.start_hz);
        r.mid_band = cascade_analysis(chain, r.mid_band_hz);
        r.band_end = cascade_analysis(chain, chain.if_band.stop_hz);
        r.sensitivity_dbm = sensitivity(r.mid_band.nf_db, req.channel_bandwidth_hz, r.required_snr_db);
        r.element_input_dbm = req.input_level_dbm + req.element_gain_db;
        r.nf_pass = r.mid_band.nf_db <= req.nf_max_db;
        r.gain_pass = r.mid_band.gain_db >= req.gain_min_db;
        if (!r.nf_pass)
            r.failures.push_back("noise figure " + std::to_string(r.mid_band.nf_db) + " dB exceeds " +
                                 std::to_string(req.nf_max_db) + " dB");
        if (!r.gain_pass)
            r.failures.push_back("gain " + std::to_string(r.mid_band.gain_db) + " dB below " +
                                 std::to_string(req.gain_min_db) + " dB");
        return r;
    }
}
