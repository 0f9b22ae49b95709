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

#include "mmrx/link_budget.hpp"
#include "mmrx/signal.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace mmrx
{
    struct ChannelMismatch
    {
        double gain_db = 0.0;
        double phase_deg = 0.0;

        friend bool operator==(const ChannelMismatch &, const ChannelMismatch &) = default;
    };

    /// Uniformly drawn per-channel gain/phase errors in [-max, +max].
    inline std::vector<ChannelMismatch> random_mismatch(std::size_t n, double max_gain_db, double max_phase_deg,
                                                        std::uint64_t seed)
    {
        Rng rng = make_substream_rng(seed, 0x6d69736dULL);
        std::uniform_real_distribution<double> gain(-max_gain_db, max_gain_db);
        std::uniform_real_distribution<double> phase(-max_phase_deg, max_phase_deg);
        std::vector<ChannelMismatch> out(n);
        for (auto &m : out)
        {
            m.gain_db = gain(rng);
            m.phase_deg = phase(rng);
        }
        return out;
    }

    struct FrontendConfig
    {
        ChainSpec chain = ChainSpec::reference_chain();
        double lo_freq = 27.9e9;
        double rf_center = 28.2e9;
        std::vector<ChannelMismatch> mismatch; // empty: no mismatch on any channel
        std::uint64_t noise_seed = 1;
        bool noise = true;
        bool source_noise = true;      // kTB at the antenna port
        bool nonlinear = true;
        bool per_channel_seeds = true; // false: every channel draws the same noise sequence
        double noise_bandwidth_hz = 0.0; // 0: the stream's sample rate
        double temperature_k = constants::reference_temperature;

        double if_freq() const { return rf_center - lo_freq; }

        void validate() const
        {
            chain.validate();
            if (!(lo_freq > 0.0) || !(rf_center > 0.0))
                throw std::invalid_argument("FrontendConfig: frequencies must be positive");
            if (!(lo_freq < rf_center))
                throw std::invalid_argument("FrontendConfig: LO must sit below the RF carrier (low-side LO)");
            if (!chain.if_band.contains(if_freq()))
                throw std::invalid_argument("FrontendConfig: IF outside the IF band");
            if (noise_bandwidth_hz < 0.0 || !(temperature_k > 0.0))
                throw std::invalid_argument("FrontendConfig: invalid noise bandwidth or temperature");
            for (const auto &m : mismatch)
                if (!std::isfinite(m.gain_db) || !std::isfinite(m.phase_deg))
                    throw std::invalid_argument("FrontendConfig: mismatch values must be finite");
        }
    };

    /// Per-element IF streams, all of equal length and rate.
    struct ChannelSet
    {
        std::vector<IqStream> streams;

        std::size_t size() const noexcept { return streams.size(); }
        const IqStream &operator[](std::size_t i) const { return streams[i]; }

        void validate() const
        {
            if (streams.empty())
                throw std::invalid_argument("ChannelSet: no channels");
            for (const auto &s : streams)
                if (s.size() != streams.front().size() || s.sample_rate() != streams.front().sample_rate())
                    throw std::invalid_argument("ChannelSet: channels differ in length or rate");
        }

        friend bool operator==(const ChannelSet &, const ChannelSet &) = default;
    };

    struct StageContext
    {
        double noise_bandwidth_hz = 0.0; // 0: the stream's sample rate
        double temperature_k = constants::reference_temperature;
        Rng *rng = nullptr;              // null: noiseless
        bool nonlinear = true;
    };

    namespace detail
    {
        inline void apply_stage_inplace(std::vector<cplx> &x, double sample_rate, const StageValues &stage,
                                        const StageContext &ctx)
        {
            const double amp_gain = db_to_amplitude(stage.gain_db);
            for (auto &v : x)
                v *= amp_gain;

            if (ctx.rng != nullptr && stage.nf_db > 0.0)
            {
                const double bw = ctx.noise_bandwidth_hz > 0.0 ? ctx.noise_bandwidth_hz : sample_rate;
                const double added = constants::boltzmann * ctx.temperature_k * bw *
                                     (db_to_linear(stage.nf_db) - 1.0) * db_to_linear(stage.gain_db);
                add_complex_noise(x, added, *ctx.rng);
            }

            // y = v - v|v|^2 / OIP3 puts each two-tone IM3 product at P^3 / OIP3^2.
            // Past the polynomial's turning point (|v|^2 = OIP3/3) the output holds
            // its maximum magnitude.
            if (ctx.nonlinear && stage.oip3_dbm)
            {
                const double oip3 = dbm_to_watts(*stage.oip3_dbm);
                const double knee = oip3 / 3.0;
                const double sat = std::sqrt(knee) * (2.0 / 3.0);
                for (auto &v : x)
                {
                    const double p = std::norm(v);
                    if (p <= knee)
                        v *= (1.0 - p / oip3);
                    else
                        v = std::polar(sat, std::arg(v));
                }
            }
        }
    }

    /// One behavioral stage: gain, additive noise kTB(F-1)G referred to the
    /// output, then memoryless cubic compression set by the stage OIP3.
    inline IqStream apply_stage(const IqStream &s, const StageValues &stage, const StageContext &ctx = {})
    {
        std::vector<cplx> x = s.samples();
        detail::apply_stage_inplace(x, s.sample_rate(), stage, ctx);
        return s.with_samples(std::move(x));
    }

    struct DownconvertResult
    {
        IqStream stream;
        bool in_band = true;
    };

    /// Low-side LO mixing. The envelope is unchanged; the stream's reference
    /// moves from the RF carrier to IF = rf - lo.
    inline DownconvertResult iq_downconvert(const IqStream &s, double lo_freq, const IfBand &band = {})
    {
        if (!(lo_freq < s.center_freq()))
            throw std::invalid_argument("iq_downconvert: LO must be below the RF center (zero or negative IF)");
        const double if_freq = s.center_freq() - lo_freq;
        return {s.with_center(if_freq), band.contains(if_freq)};
    }

    inline IqStream apply_mismatch(const IqStream &s, double gain_err_db, double phase_err_deg)
    {
        if (!std::isfinite(gain_err_db) || !std::isfinite(phase_err_deg))
            throw std::invalid_argument("apply_mismatch: errors must be finite");
        const cplx factor = std::polar(db_to_amplitude(gain_err_db), deg_to_rad(phase_err_deg));
        std::vector<cplx> x = s.samples();
        for (auto &v : x)
            v *= factor;
        return s.with_samples(std::move(x));
    }

    /// Runs every element input (an envelope referenced to `cfg.rf_center`)
    /// through its own copy of the receiver chain, then applies that channel's
    /// gain/phase mismatch. Deterministic for a given `cfg.noise_seed`.
    inline ChannelSet simulate_frontend(std::span<const IqStream> inputs, const FrontendConfig &cfg)
    {
        cfg.validate();
        if (inputs.empty() || inputs.size() > 32)
            throw std::invalid_argument("simulate_frontend: expected 1 to 32 element inputs");
        if (!cfg.mismatch.empty() && cfg.mismatch.size() != inputs.size())
            throw std::invalid_argument("simulate_frontend: mismatch list does not match element count");

        const auto stages = cfg.chain.resolve(cfg.if_freq());
        ChannelSet out;
        out.streams.reserve(inputs.size());
        for (std::size_t ch = 0; ch < inputs.size(); ++ch)
        {
            const IqStream &in = inputs[ch];
            if (in.size() != inputs.front().size() || in.sample_rate() != inputs.front().sample_rate())
                throw std::invalid_argument("simulate_frontend: element inputs differ in length or rate");
            if (in.center_freq() != cfg.rf_center)
                throw std::invalid_argument("simulate_frontend: element inputs must be referenced to rf_center");

            Rng rng = make_substream_rng(cfg.noise_seed, cfg.per_channel_seeds ? ch : 0);
            StageContext ctx{cfg.noise_bandwidth_hz, cfg.temperature_k, cfg.noise ? &rng : nullptr, cfg.nonlinear};

            std::vector<cplx> x = in.samples();
            const double fs = in.sample_rate();
            if (cfg.noise && cfg.source_noise)
            {
                const double bw = cfg.noise_bandwidth_hz > 0.0 ? cfg.noise_bandwidth_hz : fs;
                add_complex_noise(x, constants::boltzmann * cfg.temperature_k * bw, rng);
            }

            double center = cfg.rf_center;
            bool converted = false;
            for (const auto &stage : stages)
            {
                if (stage.frequency_converter && !converted)
                {
                    center = cfg.if_freq();
                    converted = true;
                }
                detail::apply_stage_inplace(x, fs, stage, ctx);
            }
            if (!converted)
                center = cfg.if_freq();

            if (!cfg.mismatch.empty())
            {
                const auto &m = cfg.mismatch[ch];
                const cplx factor = std::polar(db_to_amplitude(m.gain_db), deg_to_rad(m.phase_deg));
                for (auto &v : x)
                    v *= factor;
            }
            out.streams.emplace_back(std::move(x), fs, center);
        }
        return out;
    }
}
