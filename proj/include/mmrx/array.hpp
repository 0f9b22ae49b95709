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
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mmrx
{
    struct ArrayGeometry
    {
        std::size_t n_elements = 4;
        double spacing_wavelengths = 0.75; // d / lambda at design_freq
        double design_freq = 28e9;

        void validate() const
        {
            if (n_elements < 1)
                throw std::invalid_argument("ArrayGeometry: need at least one element");
            if (!(spacing_wavelengths > 0.0) || !(design_freq > 0.0))
                throw std::invalid_argument("ArrayGeometry: spacing and design frequency must be positive");
        }

        double spacing_m() const { return spacing_wavelengths * constants::speed_of_light / design_freq; }

        /// Inter-element phase progression (rad) for a plane wave from `theta_deg` at `freq`.
        double phase_step(double theta_deg, double freq) const
        {
            return constants::two_pi * spacing_wavelengths * (freq / design_freq) * std::sin(deg_to_rad(theta_deg));
        }
    };

    struct TaperSpec
    {
        enum class Kind
        {
            uniform,
            linear_pedestal
        };

        Kind kind = Kind::uniform;
        double pedestal_db = 0.0; // edge amplitude relative to the peak

        static TaperSpec uniform() { return {}; }
        static TaperSpec pedestal(double db) { return {Kind::linear_pedestal, db}; }

        void validate() const
        {
            if (!(pedestal_db <= 0.0) || !std::isfinite(pedestal_db))
                throw std::invalid_argument("TaperSpec: pedestal must be <= 0 dB");
        }
    };

    /// Cosine-power element power pattern cos(theta)^exponent; exponent 0 is isotropic.
    struct ElementPattern
    {
        double cos_exponent = 0.0;

        double power_gain(double theta_deg) const
        {
            if (cos_exponent == 0.0)
                return 1.0;
            const double c = std::cos(deg_to_rad(theta_deg));
            return std::pow(std::max(c, 0.0), cos_exponent);
        }
    };

    struct AngleGrid
    {
        double start = -90.0;
        double stop = 90.0;
        double step = 0.05;

        void validate() const
        {
            if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0.0) || !(stop > start))
                throw std::invalid_argument("AngleGrid: need start < stop and step > 0");
            if (start < -90.0 - 1e-9 || stop > 90.0 + 1e-9)
                throw std::invalid_argument("AngleGrid: angles must lie in [-90, 90] degrees");
        }

        std::vector<double> points() const
        {
            validate();
            const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
            std::vector<double> out(n);
            for (std::size_t i = 0; i < n; ++i)
                out[i] = start + step * static_cast<double>(i);
            return out;
        }

        /// Parses "start:stop:step".
        static AngleGrid parse(std::string_view text)
        {
            double vals[3];
            std::size_t pos = 0;
            for (int i = 0; i < 3; ++i)
            {
                const auto end = (i < 2) ? text.find(':', pos) : text.size();
                if (end == std::string_view::npos)
                    throw std::invalid_argument("AngleGrid: expected start:stop:step");
                const auto field = text.substr(pos, end - pos);
                auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), vals[i]);
                if (ec != std::errc() || ptr != field.data() + field.size())
                    throw std::invalid_argument("AngleGrid: bad number '" + std::string(field) + "'");
                pos = end + 1;
            }
            AngleGrid g{vals[0], vals[1], vals[2]};
            g.validate();
            return g;
        }
    };

    /// Power pattern in dB, normalized so its maximum is 0 dB. An all-zero
    /// pattern is -inf everywhere.
    struct Pattern
    {
        std::vector<double> angles_deg;
        std::vector<double> magnitude_db;

        std::size_t size() const noexcept { return angles_deg.size(); }
    };

    inline Pattern normalize_pattern(std::vector<double> angles_deg, std::span<const double> power_linear)
    {
        if (angles_deg.size() != power_linear.size())
            throw std::invalid_argument("normalize_pattern: size mismatch");
        for (std::size_t i = 1; i < angles_deg.size(); ++i)
            if (!(angles_deg[i] > angles_deg[i - 1]))
                throw std::invalid_argument("normalize_pattern: angle grid must be strictly increasing");
        const double peak = power_linear.empty() ? 0.0 : *std::max_element(power_linear.begin(), power_linear.end());
        Pattern p;
        p.angles_deg = std::move(angles_deg);
        p.magnitude_db.resize(power_linear.size(), -std::numeric_limits<double>::infinity());
        if (peak > 0.0)
            for (std::size_t i = 0; i < power_linear.size(); ++i)
                p.magnitude_db[i] = power_linear[i] > 0.0 ? linear_to_db(power_linear[i] / peak)
                                                          : -std::numeric_limits<double>::infinity();
        return p;
    }

    inline std::vector<cplx> steering_vector(const ArrayGeometry &g, double theta_deg, double freq)
    {
        g.validate();
        const double step = g.phase_step(theta_deg, freq);
        std::vector<cplx> v(g.n_elements);
        for (std::size_t k = 0; k < g.n_elements; ++k)
            v[k] = std::polar(1.0, step * static_cast<double>(k));
        return v;
    }

    /// Weights that co-phase a plane wave from `theta_deg`: the conjugate steering vector.
    inline std::vector<cplx> conjugate_steering_weights(const ArrayGeometry &g, double theta_deg, double freq)
    {
        auto v = steering_vector(g, theta_deg, freq);
        for (auto &x : v)
            x = std::conj(x);
        return v;
    }

    /// Symmetric amplitude taper, linear in element position from the edge
    /// level 10^(pedestal/20) up to 1 at the centre element(s).
    inline std::vector<double> taper_amplitudes(std::size_t n, const TaperSpec &t)
    {
        t.validate();
        if (n == 0)
            throw std::invalid_argument("taper_amplitudes: need at least one element");
        std::vector<double> a(n, 1.0);
        if (t.kind == TaperSpec::Kind::uniform || t.pedestal_db == 0.0 || n == 1)
            return a;
        const double edge = db_to_amplitude(t.pedestal_db);
        const double centre = 0.5 * static_cast<double>(n - 1);
        const double x_min = (n % 2 == 0) ? 0.5 : 0.0;
        const double x_max = centre;
        if (x_max <= x_min) // n == 2: both elements sit at the edge
        {
            std::fill(a.begin(), a.end(), 1.0);
            return a;
        }
        for (std::size_t k = 0; k < n; ++k)
        {
            const double x = std::abs(static_cast<double>(k) - centre);
            a[k] = 1.0 - (1.0 - edge) * (x - x_min) / (x_max - x_min);
        }
        return a;
    }

    /// |sum_k a_k w_k exp(j k psi(theta))|^2 times the element power pattern,
    /// normalized to a 0 dB peak.
    inline Pattern array_factor(const ArrayGeometry &g, std::span<const double> amplitudes,
                                std::span<const cplx> weights, std::span<const double> angles_deg, double freq,
                                const ElementPattern &element = {})
    {
        g.validate();
        if (amplitudes.size() != g.n_elements || weights.size() != g.n_elements)
            throw std::invalid_argument("array_factor: amplitude/weight length must equal element count");
        std::vector<double> power(angles_deg.size());
        for (std::size_t i = 0; i < angles_deg.size(); ++i)
        {
            const double step = g.phase_step(angles_deg[i], freq);
            cplx acc = 0.0;
            for (std::size_t k = 0; k < g.n_elements; ++k)
                acc += amplitudes[k] * weights[k] * std::polar(1.0, step * static_cast<double>(k));
            power[i] = std::norm(acc) * element.power_gain(angles_deg[i]);
        }
        return normalize_pattern(std::vector<double>(angles_deg.begin(), angles_deg.end()), power);
    }

    namespace detail
    {
        // Peak value of the parabola through three samples (dB domain).
        inline double refine_peak(double left, double mid, double right)
        {
            if (!std::isfinite(left) || !std::isfinite(right))
                return mid;
            const double denom = left - 2.0 * mid + right;
            if (denom >= 0.0)
                return mid;
            const double delta = 0.5 * (left - right) / denom;
            return mid - 0.25 * (left - right) * delta;
        }

        inline double refine_peak_offset(double left, double mid, double right)
        {
            if (!std::isfinite(left) || !std::isfinite(right))
                return 0.0;
            const double denom = left - 2.0 * mid + right;
            if (denom >= 0.0)
                return 0.0;
            return 0.5 * (left - right) / denom;
        }

        inline bool is_interior_peak(std::span<const double> p, std::size_t i)
        {
            return i > 0 && i + 1 < p.size() && p[i] >= p[i - 1] && p[i] >= p[i + 1] && std::isfinite(p[i]);
        }

        struct MainLobe
        {
            std::size_t peak;
            std::size_t left;
            std::size_t right;
        };

        // The main lobe is the highest interior local maximum (or the global
        // maximum if the pattern has none) together with the monotonically
        // descending flanks on either side.
        inline MainLobe find_main_lobe(std::span<const double> p)
        {
            if (p.empty())
                throw std::invalid_argument("pattern is empty");
            std::optional<std::size_t> best;
            for (std::size_t i = 1; i + 1 < p.size(); ++i)
                if (is_interior_peak(p, i) && (!best || p[i] > p[*best]))
                    best = i;
            if (!best)
                best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
            std::size_t l = *best, r = *best;
            while (l > 0 && p[l - 1] <= p[l])
                --l;
            while (r + 1 < p.size() && p[r + 1] <= p[r])
                ++r;
            return {*best, l, r};
        }
    }

    /// Highest sidelobe relative to the main-lobe peak, in dB, or nullopt when
    /// the pattern has no sidelobe. Only interior local maxima count; a lobe
    /// peaking on the grid boundary is reported by `edge_level`.
    inline std::optional<double> sidelobe_level(const Pattern &pat)
    {
        const std::span<const double> p = pat.magnitude_db;
        if (p.size() < 3)
            return std::nullopt;
        const auto lobe = detail::find_main_lobe(p);
        const double main_peak = detail::refine_peak(p[lobe.peak > 0 ? lobe.peak - 1 : lobe.peak], p[lobe.peak],
                                                     p[lobe.peak + 1 < p.size() ? lobe.peak + 1 : lobe.peak]);
        std::optional<double> best;
        for (std::size_t i = 1; i + 1 < p.size(); ++i)
        {
            if (i >= lobe.left && i <= lobe.right)
                continue;
            if (!detail::is_interior_peak(p, i))
                continue;
            const double v = detail::refine_peak(p[i - 1], p[i], p[i + 1]);
            if (!best || v > *best)
                best = v;
        }
        if (!best)
            return std::nullopt;
        return *best - main_peak;
    }

    /// Level of the pattern at the grid boundary relative to the main-lobe
    /// peak: the larger of the two end samples, when outside the main lobe.
    inline std::optional<double> edge_level(const Pattern &pat)
    {
        const std::span<const double> p = pat.magnitude_db;
        if (p.size() < 2)
            return std::nullopt;
        const auto lobe = detail::find_main_lobe(p);
        std::optional<double> best;
        if (lobe.left > 0)
            best = p.front();
        if (lobe.right + 1 < p.size())
            best = best ? std::max(*best, p.back()) : p.back();
        if (best)
            *best -= p[lobe.peak];
        return best;
    }

    /// Main-lobe direction with parabolic refinement, in degrees.
    inline double peak_angle(const Pattern &pat)
    {
        const std::span<const double> p = pat.magnitude_db;
        if (p.empty())
            throw std::invalid_argument("peak_angle: empty pattern");
        const auto i = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        if (!std::isfinite(p[i]))
            throw std::invalid_argument("peak_angle: pattern has no finite values");
        if (i == 0 || i + 1 == p.size())
            return pat.angles_deg[i];
        const double step = 0.5 * (pat.angles_deg[i + 1] - pat.angles_deg[i - 1]);
        return pat.angles_deg[i] + step * detail::refine_peak_offset(p[i - 1], p[i], p[i + 1]);
    }

    class PatternError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Width between the -3 dB crossings of the main lobe, linearly interpolated.
    inline double beamwidth_3db(const Pattern &pat)
    {
        const std::span<const double> p = pat.magnitude_db;
        if (p.size() < 3)
            throw PatternError("beamwidth_3db: no crossing");
        const auto lobe = detail::find_main_lobe(p);
        const double level = p[lobe.peak] - 3.0;

        auto crossing = [&](std::size_t inside, std::size_t outside) {
            const double a0 = pat.angles_deg[inside], a1 = pat.angles_deg[outside];
            const double v0 = p[inside], v1 = p[outside];
            if (!std::isfinite(v1))
                return a1;
            return a0 + (a1 - a0) * (v0 - level) / (v0 - v1);
        };

        std::optional<double> left, right;
        for (std::size_t i = lobe.peak; i > 0; --i)
            if (p[i - 1] < level)
            {
                left = crossing(i, i - 1);
                break;
            }
        for (std::size_t i = lobe.peak; i + 1 < p.size(); ++i)
            if (p[i + 1] < level)
            {
                right = crossing(i, i + 1);
                break;
            }
        if (!left || !right)
            throw PatternError("beamwidth_3db: no crossing");
        return *right - *left;
    }

    inline constexpr std::size_t kElevationElements = 8;
    inline constexpr double kElevationSpacing = 1.0; // series feed, one wavelength apart

    /// Elevation-plane pattern of the series-fed sub-array: 8 in-phase
    /// elements one wavelength apart with the given amplitude taper.
    inline Pattern element_pattern_elevation(const TaperSpec &taper, std::span<const double> angles_deg,
                                             double design_freq = 28e9)
    {
        const ArrayGeometry g{kElevationElements, kElevationSpacing, design_freq};
        const auto a = taper_amplitudes(g.n_elements, taper);
        const std::vector<cplx> w(g.n_elements, cplx(1.0, 0.0));
        return array_factor(g, a, w, angles_deg, design_freq);
    }

    /// Broadside power gain of the tapered sub-array, |sum a_k|^2, in dB.
    inline double elevation_broadside_gain_db(const TaperSpec &taper)
    {
        const auto a = taper_amplitudes(kElevationElements, taper);
        double s = 0.0;
        for (double v : a)
            s += v;
        return linear_to_db(s * s);
    }
}
