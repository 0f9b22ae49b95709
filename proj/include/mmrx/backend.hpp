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

#include "mmrx/array.hpp"
#include "mmrx/frontend.hpp"
#include "mmrx/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mmrx
{
    inline constexpr std::size_t kDefaultLanes = 8;

    struct AdcConfig
    {
        double sample_rate = 1966.08e6;
        int resolution_bits = 12;
        double full_scale_dbm = 10.0; // power of a complex tone whose I and Q peaks reach full scale
        bool ideal = false;
        std::size_t lanes = kDefaultLanes;

        void validate() const
        {
            if (!(sample_rate > 0.0))
                throw std::invalid_argument("AdcConfig: sample rate must be positive");
            if (lanes == 0 || std::fmod(sample_rate, static_cast<double>(lanes)) != 0.0)
                throw std::invalid_argument("AdcConfig: sample rate must divide evenly into the lanes");
            if (resolution_bits < 4 || resolution_bits > 16)
                throw std::invalid_argument("AdcConfig: resolution must be 4..16 bits");
            if (!std::isfinite(full_scale_dbm))
                throw std::invalid_argument("AdcConfig: full scale must be finite");
        }

        double lane_rate() const { return sample_rate / static_cast<double>(lanes); }
    };

    struct AdcResult
    {
        IqStream stream;
        std::size_t clipped_samples = 0;

        bool clipped() const noexcept { return clipped_samples > 0; }
    };

    /// Quantizes I and Q independently with a mid-rise uniform quantizer of
    /// 2^bits levels spanning [-V_fs, V_fs]; values beyond full scale clip.
    inline AdcResult adc_sample(const IqStream &s, const AdcConfig &cfg)
    {
        cfg.validate();
        if (s.sample_rate() != cfg.sample_rate)
            throw std::invalid_argument("adc_sample: stream rate differs from the ADC rate");
        if (cfg.ideal)
            return {s, 0};

        const double v_fs = std::sqrt(dbm_to_watts(cfg.full_scale_dbm));
        const double levels = std::ldexp(1.0, cfg.resolution_bits);
        const double step = 2.0 * v_fs / levels;
        const double lo = -levels / 2.0, hi = levels / 2.0 - 1.0;
        std::size_t clipped = 0;

        auto quantize = [&](double v, bool &clip) {
            if (std::abs(v) > v_fs)
                clip = true;
            const double idx = std::clamp(std::floor(v / step), lo, hi);
            return (idx + 0.5) * step;
        };

        std::vector<cplx> out(s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
        {
            bool clip = false;
            out[i] = cplx(quantize(s[i].real(), clip), quantize(s[i].imag(), clip));
            clipped += clip ? 1 : 0;
        }
        return {s.with_samples(std::move(out)), clipped};
    }

    /// Lane k holds samples k, k + L, k + 2L, ... of the full-rate stream.
    struct PolyphaseFrame
    {
        std::vector<std::vector<cplx>> lanes;
        double lane_rate = 1.0;
        double center_freq = 0.0;
        std::size_t truncated = 0; // trailing samples dropped to make the length a multiple of L

        std::size_t lane_count() const noexcept { return lanes.size(); }
        std::size_t lane_length() const noexcept { return lanes.empty() ? 0 : lanes.front().size(); }

        friend bool operator==(const PolyphaseFrame &, const PolyphaseFrame &) = default;
    };

    inline PolyphaseFrame polyphase_split(const IqStream &s, std::size_t lanes = kDefaultLanes)
    {
        if (lanes == 0)
            throw std::invalid_argument("polyphase_split: need at least one lane");
        const std::size_t per_lane = s.size() / lanes;
        PolyphaseFrame f;
        f.lane_rate = s.sample_rate() / static_cast<double>(lanes);
        f.center_freq = s.center_freq();
        f.truncated = s.size() - per_lane * lanes;
        f.lanes.assign(lanes, std::vector<cplx>(per_lane));
        const auto &x = s.samples();
        for (std::size_t i = 0; i < per_lane; ++i)
            for (std::size_t k = 0; k < lanes; ++k)
                f.lanes[k][i] = x[i * lanes + k];
        return f;
    }

    inline IqStream polyphase_merge(const PolyphaseFrame &f)
    {
        const std::size_t lanes = f.lane_count();
        if (lanes == 0)
            throw std::invalid_argument("polyphase_merge: frame has no lanes");
        const std::size_t per_lane = f.lane_length();
        for (const auto &l : f.lanes)
            if (l.size() != per_lane)
                throw std::invalid_argument("polyphase_merge: lanes differ in length");
        std::vector<cplx> x(per_lane * lanes);
        for (std::size_t i = 0; i < per_lane; ++i)
            for (std::size_t k = 0; k < lanes; ++k)
                x[i * lanes + k] = f.lanes[k][i];
        return IqStream(std::move(x), f.lane_rate * static_cast<double>(lanes), f.center_freq);
    }

    /// Per-channel complex correction constants alpha_i + j beta_i, relative
    /// to a reference channel whose constant is exactly 1.
    struct CalibrationSet
    {
        std::vector<cplx> constants;
        std::size_t reference_index = 0;

        static CalibrationSet identity(std::size_t n, std::size_t reference = 0)
        {
            return {std::vector<cplx>(n, cplx(1.0, 0.0)), reference};
        }

        void validate() const
        {
            if (constants.empty() || reference_index >= constants.size())
                throw std::invalid_argument("CalibrationSet: reference index out of range");
            if (constants[reference_index] != cplx(1.0, 0.0))
                throw std::invalid_argument("CalibrationSet: reference constant must be exactly 1");
            for (const auto &c : constants)
                if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                    throw std::invalid_argument("CalibrationSet: constants must be finite");
        }
    };

    /// Least-squares complex scalar mapping each channel onto the reference:
    /// c_i = sum(conj(x_i) x_ref) / sum(|x_i|^2). All channels must carry the
    /// same reference signal.
    inline CalibrationSet estimate_calibration(const ChannelSet &ch, std::size_t reference_index)
    {
        ch.validate();
        if (reference_index >= ch.size())
            throw std::invalid_argument("estimate_calibration: reference index out of range");
        const auto &ref = ch[reference_index].samples();
        double ref_power = 0.0;
        for (const auto &v : ref)
            ref_power += std::norm(v);
        if (!(ref_power > 0.0))
            throw std::invalid_argument("estimate_calibration: reference channel carries no power");

        CalibrationSet cal;
        cal.reference_index = reference_index;
        cal.constants.resize(ch.size());
        for (std::size_t i = 0; i < ch.size(); ++i)
        {
            if (i == reference_index)
            {
                cal.constants[i] = cplx(1.0, 0.0);
                continue;
            }
            const auto &x = ch[i].samples();
            cplx cross = 0.0;
            double power = 0.0;
            for (std::size_t n = 0; n < x.size(); ++n)
            {
                cross += std::conj(x[n]) * ref[n];
                power += std::norm(x[n]);
            }
            if (!(power > ref_power * 1e-18))
                throw std::invalid_argument("estimate_calibration: channel power too small, estimate is singular");
            cal.constants[i] = cross / power;
        }
        return cal;
    }

    /// Multiplies every lane of channel i by c_i.
    inline std::vector<PolyphaseFrame> apply_calibration(std::vector<PolyphaseFrame> frames, const CalibrationSet &cal)
    {
        cal.validate();
        if (frames.size() != cal.constants.size())
            throw std::invalid_argument("apply_calibration: channel count differs from calibration set");
        for (std::size_t i = 0; i < frames.size(); ++i)
            for (auto &lane : frames[i].lanes)
                for (auto &v : lane)
                    v *= cal.constants[i];
        return frames;
    }

    inline ChannelSet apply_calibration(const ChannelSet &ch, const CalibrationSet &cal)
    {
        cal.validate();
        if (ch.size() != cal.constants.size())
            throw std::invalid_argument("apply_calibration: channel count differs from calibration set");
        ChannelSet out;
        for (std::size_t i = 0; i < ch.size(); ++i)
        {
            std::vector<cplx> x = ch[i].samples();
            for (auto &v : x)
                v *= cal.constants[i];
            out.streams.push_back(ch[i].with_samples(std::move(x)));
        }
        return out;
    }

    struct BeamWeights
    {
        std::vector<cplx> weights;
        double target_angle_deg = 0.0;

        /// Conjugate steering weights toward `angle_deg` at `freq`.
        static BeamWeights steer(const ArrayGeometry &g, double angle_deg, double freq)
        {
            return {conjugate_steering_weights(g, angle_deg, freq), angle_deg};
        }

        std::size_t size() const noexcept { return weights.size(); }
    };

    /// Weight-and-sum on each lane independently: out.lane_l = sum_i w_i x_i.lane_l.
    inline PolyphaseFrame beamform(std::span<const PolyphaseFrame> channels, const BeamWeights &w)
    {
        if (channels.empty() || channels.size() != w.size())
            throw std::invalid_argument("beamform: weight count differs from channel count");
        const auto &first = channels.front();
        for (const auto &c : channels)
            if (c.lane_count() != first.lane_count() || c.lane_length() != first.lane_length() ||
                c.lane_rate != first.lane_rate)
                throw std::invalid_argument("beamform: channel frames differ in shape");

        PolyphaseFrame out;
        out.lane_rate = first.lane_rate;
        out.center_freq = first.center_freq;
        out.truncated = first.truncated;
        out.lanes.assign(first.lane_count(), std::vector<cplx>(first.lane_length(), cplx(0.0, 0.0)));
        for (std::size_t l = 0; l < first.lane_count(); ++l)
            for (std::size_t i = 0; i < channels.size(); ++i)
            {
                const cplx wi = w.weights[i];
                const auto &in = channels[i].lanes[l];
                auto &acc = out.lanes[l];
                for (std::size_t n = 0; n < in.size(); ++n)
                    acc[n] += wi * in[n];
            }
        return out;
    }

    /// Full-rate weight-and-sum.
    inline IqStream beamform(const ChannelSet &ch, const BeamWeights &w)
    {
        ch.validate();
        if (ch.size() != w.size())
            throw std::invalid_argument("beamform: weight count differs from channel count");
        std::vector<cplx> acc(ch[0].size(), cplx(0.0, 0.0));
        for (std::size_t i = 0; i < ch.size(); ++i)
        {
            const cplx wi = w.weights[i];
            const auto &in = ch[i].samples();
            for (std::size_t n = 0; n < in.size(); ++n)
                acc[n] += wi * in[n];
        }
        return ch[0].with_samples(std::move(acc));
    }

    inline double frame_mean_power(const PolyphaseFrame &f)
    {
        double acc = 0.0;
        std::size_t count = 0;
        for (const auto &lane : f.lanes)
        {
            for (const auto &v : lane)
                acc += std::norm(v);
            count += lane.size();
        }
        if (count == 0)
            throw std::invalid_argument("frame_mean_power: empty frame");
        return acc / static_cast<double>(count);
    }

    /// ADC capture of each channel: the IF envelope is re-referenced to 0 Hz
    /// (the converter sees the IF as a tone offset), quantized, and split into
    /// lanes.
    struct DigitizedChannels
    {
        std::vector<PolyphaseFrame> frames;
        std::size_t clipped_samples = 0;
    };

    inline DigitizedChannels digitize(const ChannelSet &ch, const AdcConfig &adc)
    {
        ch.validate();
        DigitizedChannels out;
        out.frames.reserve(ch.size());
        for (const auto &s : ch.streams)
        {
            auto sampled = adc_sample(retune(s, 0.0), adc);
            out.clipped_samples += sampled.clipped_samples;
            out.frames.push_back(polyphase_split(sampled.stream, adc.lanes));
        }
        return out;
    }

    /// Merges each channel's lanes back to a full-rate channel set.
    inline ChannelSet merge_channels(std::span<const PolyphaseFrame> frames)
    {
        ChannelSet out;
        for (const auto &f : frames)
            out.streams.push_back(polyphase_merge(f));
        return out;
    }

    /// Everything needed to re-run the receive pipeline for one direction of
    /// arrival: `capture` returns the analog channel set for a wavefront from
    /// the given angle.
    struct SweepPipeline
    {
        std::function<ChannelSet(double doa_deg)> capture;
        AdcConfig adc;
        std::optional<CalibrationSet> calibration;
    };

    /// Beamformed output energy per direction of arrival with fixed weights,
    /// normalized to a 0 dB peak (all -inf if nothing gets through).
    inline Pattern beam_energy_sweep(const SweepPipeline &pipe, const BeamWeights &w, std::span<const double> doa_grid)
    {
        if (!pipe.capture)
            throw std::invalid_argument("beam_energy_sweep: no capture function");
        std::vector<double> energy(doa_grid.size());
        for (std::size_t i = 0; i < doa_grid.size(); ++i)
        {
            auto digitized = digitize(pipe.capture(doa_grid[i]), pipe.adc);
            auto frames = pipe.calibration ? apply_calibration(std::move(digitized.frames), *pipe.calibration)
                                           : std::move(digitized.frames);
            energy[i] = frame_mean_power(beamform(frames, w));
        }
        return normalize_pattern(std::vector<double>(doa_grid.begin(), doa_grid.end()), energy);
    }
}
