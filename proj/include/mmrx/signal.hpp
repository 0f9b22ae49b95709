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

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmrx
{
    using cplx = std::complex<double>;
    using Rng = std::mt19937_64;

    namespace constants
    {
        inline constexpr double boltzmann = 1.380649e-23; // J/K
        inline constexpr double reference_temperature = 290.0;
        inline constexpr double speed_of_light = 299792458.0;
        inline constexpr double two_pi = 2.0 * std::numbers::pi;
    }

    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
    inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
    inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
    inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

    inline double dbm_to_watts(double dbm)
    {
        if (!std::isfinite(dbm))
            throw std::invalid_argument("dbm_to_watts: power level must be finite");
        return std::pow(10.0, (dbm - 30.0) / 10.0);
    }

    // Zero power maps to -inf, which callers report as "below floor".
    inline double watts_to_dbm(double watts)
    {
        if (watts < 0.0 || std::isnan(watts))
            throw std::invalid_argument("watts_to_dbm: power must be non-negative");
        if (watts == 0.0)
            return -std::numeric_limits<double>::infinity();
        return 10.0 * std::log10(watts) + 30.0;
    }

    /// Complex-envelope sample stream. Samples are volt-normalized on a 1 ohm
    /// reference, so mean |s|^2 is power in watts. `center_freq` is the carrier
    /// or IF the envelope is referenced to; it is bookkeeping only.
    class IqStream
    {
    public:
        IqStream() = default;

        IqStream(std::vector<cplx> samples, double sample_rate, double center_freq = 0.0)
            : samples_(std::move(samples)), sample_rate_(sample_rate), center_freq_(center_freq)
        {
            if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
                throw std::invalid_argument("IqStream: sample rate must be positive");
            if (!std::isfinite(center_freq_))
                throw std::invalid_argument("IqStream: center frequency must be finite");
            for (const auto &s : samples_)
                if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
                    throw std::invalid_argument("IqStream: samples must be finite");
        }

        const std::vector<cplx> &samples() const noexcept { return samples_; }
        std::vector<cplx> &&release() && noexcept { return std::move(samples_); }
        double sample_rate() const noexcept { return sample_rate_; }
        double center_freq() const noexcept { return center_freq_; }
        std::size_t size() const noexcept { return samples_.size(); }
        bool empty() const noexcept { return samples_.empty(); }
        const cplx &operator[](std::size_t i) const { return samples_[i]; }

        IqStream with_samples(std::vector<cplx> samples) const
        {
            return IqStream(std::move(samples), sample_rate_, center_freq_);
        }
        IqStream with_center(double center_freq) const
        {
            return IqStream(samples_, sample_rate_, center_freq);
        }

        friend bool operator==(const IqStream &, const IqStream &) = default;

    private:
        std::vector<cplx> samples_;
        double sample_rate_ = 1.0;
        double center_freq_ = 0.0;
    };

    inline double mean_power_watts(const std::vector<cplx> &samples)
    {
        if (samples.empty())
            throw std::invalid_argument("measure_power: empty stream");
        double acc = 0.0;
        for (const auto &s : samples)
            acc += std::norm(s);
        return acc / static_cast<double>(samples.size());
    }

    inline double measure_power(const IqStream &stream)
    {
        return watts_to_dbm(mean_power_watts(stream.samples()));
    }

    inline IqStream make_tone(double freq_offset, double sample_rate, double power_dbm, double phase_rad,
                              std::size_t n)
    {
        if (!(sample_rate > 0.0))
            throw std::invalid_argument("make_tone: sample rate must be positive");
        if (!(std::abs(freq_offset) < sample_rate / 2.0))
            throw std::invalid_argument("make_tone: offset beyond Nyquist would alias");
        const double amplitude = std::sqrt(dbm_to_watts(power_dbm));
        const double step = constants::two_pi * freq_offset / sample_rate;
        std::vector<cplx> samples(n);
        for (std::size_t i = 0; i < n; ++i)
            samples[i] = std::polar(amplitude, phase_rad + step * static_cast<double>(i));
        return IqStream(std::move(samples), sample_rate);
    }

    inline double thermal_noise_power(double bandwidth_hz, double temperature_k = constants::reference_temperature)
    {
        if (!(bandwidth_hz > 0.0) || !(temperature_k > 0.0))
            throw std::invalid_argument("thermal_noise_power: bandwidth and temperature must be positive");
        return 10.0 * std::log10(constants::boltzmann * temperature_k * bandwidth_hz) + 30.0;
    }

    /// Rotates the envelope so it is referenced to `new_center` instead of the
    /// stream's current center frequency. Content at absolute frequency f moves
    /// to offset f - new_center, wrapped into the sampled band.
    inline IqStream retune(const IqStream &s, double new_center)
    {
        const double shift = s.center_freq() - new_center;
        const double step = constants::two_pi * shift / s.sample_rate();
        std::vector<cplx> out(s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            out[i] = s[i] * std::polar(1.0, step * static_cast<double>(i));
        return IqStream(std::move(out), s.sample_rate(), new_center);
    }

    /// Adds circular complex Gaussian noise of total power `power_watts`.
    inline void add_complex_noise(std::vector<cplx> &samples, double power_watts, Rng &rng)
    {
        if (power_watts <= 0.0)
            return;
        std::normal_distribution<double> gauss(0.0, std::sqrt(power_watts / 2.0));
        for (auto &s : samples)
        {
            const double re = gauss(rng);
            const double im = gauss(rng);
            s += cplx(re, im);
        }
    }

    /// Independent per-stream generator derived from (seed, index).
    inline Rng make_substream_rng(std::uint64_t seed, std::uint64_t index)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x6d6d7278u};
        return Rng(seq);
    }
}
