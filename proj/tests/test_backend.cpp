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

#include "mmrx/backend.hpp"
#include "mmrx/fft.hpp"
#include "mmrx/frontend.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace mmrx;

namespace
{
    constexpr double kFs = 1966.08e6;

    IqStream random_stream(std::size_t n, std::uint64_t seed, double fs = kFs)
    {
        std::vector<cplx> x(n);
        Rng rng = make_substream_rng(seed, 0);
        add_complex_noise(x, 1.0, rng);
        return IqStream(std::move(x), fs, 0.0);
    }

    ChannelSet plane_wave(const ArrayGeometry &g, double doa, double power_dbm, std::size_t n,
                          const std::vector<ChannelMismatch> &mismatch = {})
    {
        const auto tone = make_tone(12.3e6, kFs, power_dbm, 0.0, n);
        const auto a = steering_vector(g, doa, g.design_freq);
        ChannelSet ch;
        for (std::size_t i = 0; i < g.n_elements; ++i)
        {
            std::vector<cplx> x = tone.samples();
            for (auto &v : x)
                v *= a[i];
            IqStream s = tone.with_samples(std::move(x));
            if (!mismatch.empty())
                s = apply_mismatch(s, mismatch[i].gain_db, mismatch[i].phase_deg);
            ch.streams.push_back(std::move(s));
        }
        return ch;
    }

    double fitted_snr_db(const IqStream &out, const IqStream &reference)
    {
        cplx cross = 0.0;
        double ref = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            cross += std::conj(reference[i]) * out[i];
            ref += std::norm(reference[i]);
        }
        const cplx g = cross / ref;
        double noise = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i)
            noise += std::norm(out[i] - g * reference[i]);
        return linear_to_db(std::norm(g) * ref / noise);
    }
}

TEST(Adc, IdealIsIdentity)
{
    AdcConfig cfg;
    cfg.ideal = true;
    const auto s = random_stream(4096, 1);
    const auto r = adc_sample(s, cfg);
    EXPECT_EQ(r.stream, s);
    EXPECT_FALSE(r.clipped());
}

TEST(Adc, TwelveBitQuantizationSnr)
{
    AdcConfig cfg;
    const auto tone = make_tone(kFs * 0.1234567, kFs, cfg.full_scale_dbm - 0.1, 0.3, 1u << 16);
    const auto r = adc_sample(tone, cfg);
    EXPECT_FALSE(r.clipped());
    EXPECT_NEAR(fitted_snr_db(r.stream, tone), 6.02 * 12 + 1.76, 1.0);
}

TEST(Adc, OverdriveClipsAndIsReported)
{
    AdcConfig cfg;
    const auto tone = make_tone(kFs * 0.01, kFs, cfg.full_scale_dbm + 10.0, 0.0, 1024);
    const auto r = adc_sample(tone, cfg);
    EXPECT_TRUE(r.clipped());
    const double v_fs = std::sqrt(dbm_to_watts(cfg.full_scale_dbm));
    for (const auto &v : r.stream.samples())
    {
        EXPECT_LE(std::abs(v.real()), v_fs);
        EXPECT_LE(std::abs(v.imag()), v_fs);
    }
}

TEST(Adc, RejectsRateMismatchAndBadConfig)
{
    AdcConfig cfg;
    EXPECT_THROW(adc_sample(random_stream(64, 1, 1e9), cfg), std::invalid_argument);
    cfg.resolution_bits = 3;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.sample_rate = 1e9 + 3;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Polyphase, LaneRateOfReferenceAdc)
{
    EXPECT_DOUBLE_EQ(AdcConfig{}.lane_rate(), 245.76e6);
}

TEST(Polyphase, SplitDefinition)
{
    std::vector<cplx> x(16);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = static_cast<double>(i);
    const auto f = polyphase_split(IqStream(x, kFs));
    ASSERT_EQ(f.lane_count(), 8u);
    EXPECT_EQ(f.lanes[0], (std::vector<cplx>{0.0, 8.0}));
    EXPECT_EQ(f.lanes[7], (std::vector<cplx>{7.0, 15.0}));
    EXPECT_DOUBLE_EQ(f.lane_rate, kFs / 8);
}

TEST(Polyphase, RoundTripBitExact)
{
    for (std::size_t n : {8, 64, 4096, 8 * 12345})
    {
        const auto s = random_stream(n, n);
        EXPECT_EQ(polyphase_merge(polyphase_split(s)), s);
    }
}

TEST(Polyphase, TruncatesToWholeFrames)
{
    const auto f = polyphase_split(random_stream(19, 2));
    EXPECT_EQ(f.truncated, 3u);
    EXPECT_EQ(f.lane_length(), 2u);
}

TEST(Polyphase, LaneSeesAliasedTone)
{
    const std::size_t n = 8 * 1024;
    const double lane_rate = kFs / 8;
    const double f = 300e6; // folds to 300 - 245.76 = 54.24 MHz
    const auto frame = polyphase_split(make_tone(f, kFs, 0.0, 0.0, n));
    const double alias = std::remainder(f, lane_rate);
    EXPECT_NEAR(alias, 54.24e6, 1.0);
    for (std::size_t k : {0, 3, 7})
    {
        const auto spec = unitary_dft(frame.lanes[k]);
        std::size_t best = 0;
        for (std::size_t b = 1; b < spec.size(); ++b)
            if (std::norm(spec[b]) > std::norm(spec[best]))
                best = b;
        const double bin_hz = lane_rate / static_cast<double>(spec.size());
        double found = static_cast<double>(best) * bin_hz;
        if (found >= lane_rate / 2)
            found -= lane_rate;
        EXPECT_NEAR(found, alias, bin_hz);
    }
}

TEST(Calibration, IdenticalChannelsGiveUnity)
{
    const auto s = random_stream(1024, 5);
    const ChannelSet ch{{s, s, s, s}};
    const auto cal = estimate_calibration(ch, 0);
    for (const auto &c : cal.constants)
        EXPECT_NEAR(std::abs(c - cplx(1.0, 0.0)), 0.0, 1e-12);
}

TEST(Calibration, InvertsAScalar)
{
    const auto s = random_stream(1024, 6);
    const auto scaled = apply_mismatch(s, 20.0 * std::log10(2.0), 90.0);
    const ChannelSet ch{{s, scaled}};
    const auto cal = estimate_calibration(ch, 0);
    EXPECT_EQ(cal.constants[0], cplx(1.0, 0.0));
    EXPECT_NEAR(std::abs(cal.constants[1] - std::polar(0.5, -std::numbers::pi / 2)), 0.0, 1e-9);
}

TEST(Calibration, ResidualAfterRandomMismatchNoiseless)
{
    const ArrayGeometry g{4, 0.75, 28e9};
    const auto ch = plane_wave(g, 0.0, -30.0, 4096, random_mismatch(4, 3.0, 60.0, 17));
    const auto cal = estimate_calibration(ch, 0);
    const auto fixed = apply_calibration(ch, cal);
    double ref = 0.0;
    for (const auto &v : ch[0].samples())
        ref += std::norm(v);
    for (std::size_t i = 0; i < fixed.size(); ++i)
    {
        double err = 0.0;
        for (std::size_t n = 0; n < ch[0].size(); ++n)
            err += std::norm(fixed[i][n] - ch[0][n]);
        EXPECT_LT(std::sqrt(err / ref), 1e-9) << i;
    }
}

TEST(Calibration, IdempotentOnCalibratedChannels)
{
    const ArrayGeometry g{4, 0.75, 28e9};
    const auto ch = plane_wave(g, 0.0, -30.0, 2048, random_mismatch(4, 3.0, 60.0, 23));
    const auto once = apply_calibration(ch, estimate_calibration(ch, 2));
    for (const auto &c : estimate_calibration(once, 2).constants)
        EXPECT_NEAR(std::abs(c - cplx(1.0, 0.0)), 0.0, 1e-9);
}

TEST(Calibration, SingularChannelRejected)
{
    const auto s = random_stream(256, 7);
    const ChannelSet ch{{s, s.with_samples(std::vector<cplx>(256))}};
    EXPECT_THROW(estimate_calibration(ch, 0), std::invalid_argument);
    EXPECT_THROW(estimate_calibration(ch, 5), std::invalid_argument);
}

TEST(Calibration, SetValidation)
{
    CalibrationSet cal{{cplx(1.0, 1e-15), 2.0}, 0};
    EXPECT_THROW(cal.validate(), std::invalid_argument);
    cal.reference_index = 3;
    EXPECT_THROW(cal.validate(), std::invalid_argument);
    EXPECT_NO_THROW(CalibrationSet::identity(4, 1).validate());
}

TEST(Calibration, IdentityAndConjugatePair)
{
    const auto s = random_stream(512, 8);
    const std::vector<PolyphaseFrame> frames{polyphase_split(s), polyphase_split(s)};
    EXPECT_EQ(apply_calibration(frames, CalibrationSet::identity(2)), frames);

    const cplx c = std::polar(1.0, 0.7);
    const auto once = apply_calibration(frames, CalibrationSet{{1.0, c}, 0});
    const auto twice = apply_calibration(once, CalibrationSet{{1.0, std::conj(c)}, 0});
    for (std::size_t l = 0; l < 8; ++l)
        for (std::size_t n = 0; n < frames[1].lane_length(); ++n)
            EXPECT_NEAR(std::abs(twice[1].lanes[l][n] - frames[1].lanes[l][n]), 0.0, 1e-15);
}

TEST(Calibration, LaneWiseMatchesFullRate)
{
    const ArrayGeometry g{4, 0.75, 28e9};
    const auto ch = plane_wave(g, 10.0, -30.0, 4096, random_mismatch(4, 3.0, 60.0, 3));
    const auto cal = estimate_calibration(ch, 0);
    std::vector<PolyphaseFrame> frames;
    for (const auto &s : ch.streams)
        frames.push_back(polyphase_split(s));
    EXPECT_EQ(merge_channels(apply_calibration(frames, cal)), apply_calibration(ch, cal));
}

TEST(Beamform, SingleChannelUnitWeightIsIdentity)
{
    const auto s = random_stream(256, 9);
    const std::vector<PolyphaseFrame> frames{polyphase_split(s)};
    EXPECT_EQ(polyphase_merge(beamform(frames, BeamWeights{{1.0}, 0.0})), s);
}

TEST(Beamform, CoherentGainAtTrueDoa)
{
    const ArrayGeometry g{4, 0.75, 28e9};
    const auto ch = plane_wave(g, 20.0, -30.0, 4096);
    const auto out = beamform(ch, BeamWeights::steer(g, 20.0, g.design_freq));
    EXPECT_NEAR(measure_power(out) - measure_power(ch[0]), 10.0 * std::log10(16.0), 0.1);
}

TEST(Beamform, LaneWiseEqualsFullRate)
{
    const ArrayGeometry g{4, 0.75, 28e9};
    ChannelSet ch;
    std::vector<PolyphaseFrame> frames;
    for (std::uint64_t i = 0; i < 4; ++i)
    {
        ch.streams.push_back(random_stream(8 * 500, 100 + i));
        frames.push_back(polyphase_split(ch.streams.back()));
    }
    const auto w = BeamWeights::steer(g, -33.0, 28e9);
    EXPECT_EQ(polyphase_merge(beamform(frames, w)), beamform(ch, w));
}

TEST(Beamform, ShapeMismatchRejected)
{
    const std::vector<PolyphaseFrame> frames{polyphase_split(random_stream(64, 1)), polyphase_split(random_stream(72, 2))};
    EXPECT_THROW(beamform(frames, BeamWeights{{1.0, 1.0}, 0.0}), std::invalid_argument);
    EXPECT_THROW(beamform(frames, BeamWeights{{1.0}, 0.0}), std::invalid_argument);
}

TEST(Beamform, SnrGainWithIndependentNoise)
{
    const ArrayGeometry g{4, 0.75, 28e9};
    const std::size_t n = 1u << 15;
    const auto clean = plane_wave(g, 20.0, -60.0, n);
    ChannelSet noisy;
    for (std::size_t i = 0; i < 4; ++i)
    {
        std::vector<cplx> x = clean[i].samples();
        Rng rng = make_substream_rng(55, i);
        add_complex_noise(x, dbm_to_watts(-60.0), rng);
        noisy.streams.push_back(clean[i].with_samples(std::move(x)));
    }
    const auto w = BeamWeights::steer(g, 20.0, g.design_freq);
    const double single = fitted_snr_db(noisy[0], clean[0]);
    const double combined = fitted_snr_db(beamform(noisy, w), beamform(clean, w));
    EXPECT_NEAR(combined - single, 10.0 * std::log10(4.0), 0.5);
}

TEST(Sweep, ZeroWeightsGiveFlatFloor)
{
    const ArrayGeometry g{4, 0.75, 28e9};
    SweepPipeline pipe{[&](double doa) { return plane_wave(g, doa, -30.0, 512); }, AdcConfig{}, std::nullopt};
    const std::vector<double> grid{-10.0, 0.0, 10.0};
    const auto p = beam_energy_sweep(pipe, BeamWeights{std::vector<cplx>(4), 0.0}, grid);
    for (double v : p.magnitude_db)
        EXPECT_EQ(v, -std::numeric_limits<double>::infinity());
}

TEST(Sweep, PeakInvariantToAdcResolution)
{
    const ArrayGeometry g{4, 0.75, 28e9};
    const auto grid = AngleGrid{-60, 60, 0.5}.points();
    const auto w = BeamWeights::steer(g, 20.0, g.design_freq);
    AdcConfig ideal;
    ideal.ideal = true;
    SweepPipeline pipe{[&](double doa) { return plane_wave(g, doa, -10.0, 1024); }, ideal, std::nullopt};
    const double reference = peak_angle(beam_energy_sweep(pipe, w, grid));
    EXPECT_NEAR(reference, 20.0, 0.5);
    for (int bits : {8, 10, 12, 16})
    {
        pipe.adc = AdcConfig{};
        pipe.adc.resolution_bits = bits;
        EXPECT_NEAR(peak_angle(beam_energy_sweep(pipe, w, grid)), reference, 0.5) << bits;
    }
}
