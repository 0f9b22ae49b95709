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
#include "mmrx/backend.hpp"
#include "mmrx/frontend.hpp"
#include "mmrx/link_budget.hpp"
#include "mmrx/ofdm.hpp"
#include "mmrx/signal.hpp"

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mmrx
{
    struct Stimulus
    {
        enum class Kind
        {
            tone,
            ofdm
        };

        Kind kind = Kind::tone;
        double rf_freq = 28.2e9;
        double power_dbm = -85.0; // at the antenna, before the element gain
        double doa_deg = 20.0;
    };

    /// Either an explicit per-channel list or a seeded uniform draw.
    struct MismatchSpec
    {
        std::vector<ChannelMismatch> explicit_values;
        double random_gain_db = 3.0;
        double random_phase_deg = 60.0;

        std::vector<ChannelMismatch> resolve(std::size_t n, std::uint64_t seed) const
        {
            if (!explicit_values.empty())
            {
                if (explicit_values.size() != n)
                    throw std::invalid_argument("MismatchSpec: explicit list does not match element count");
                return explicit_values;
            }
            if (random_gain_db == 0.0 && random_phase_deg == 0.0)
                return std::vector<ChannelMismatch>(n);
            return random_mismatch(n, random_gain_db, random_phase_deg, seed);
        }
    };

    struct Scenario
    {
        ArrayGeometry geometry;
        TaperSpec taper = TaperSpec::pedestal(-6.0);
        ElementPattern element_pattern;
        FrontendConfig frontend;
        MismatchSpec mismatch;
        AdcConfig adc;
        std::optional<OfdmParams> ofdm;
        Stimulus stimulus;
        double weights_angle_deg = 20.0;
        std::optional<std::vector<cplx>> explicit_weights;
        std::uint64_t seed = 1;
        LinkRequirement requirement;
        bool calibrate = true;
        std::size_t reference_index = 0;
        double calibration_reference_dbm = -85.0; // reference tone at the antenna, broadside
        std::optional<CalibrationSet> calibration; // imported set; skips estimation
        std::size_t capture_samples = 4096;
        std::size_t link_symbols = 10000;
        AngleGrid sweep_grid{-90.0, 90.0, 0.5};

        void validate() const
        {
            geometry.validate();
            taper.validate();
            frontend.validate();
            adc.validate();
            requirement.validate();
            if (ofdm)
                ofdm->validate_modem();
            if (stimulus.doa_deg < -90.0 || stimulus.doa_deg > 90.0)
                throw std::invalid_argument("Scenario: stimulus DOA must lie in [-90, 90] degrees");
            if (!(stimulus.rf_freq > 0.0) || !std::isfinite(stimulus.power_dbm))
                throw std::invalid_argument("Scenario: invalid stimulus");
            if (geometry.n_elements > 32)
                throw std::invalid_argument("Scenario: at most 32 elements");
            if (explicit_weights && explicit_weights->size() != geometry.n_elements)
                throw std::invalid_argument("Scenario: weight count differs from element count");
            if (reference_index >= geometry.n_elements)
                throw std::invalid_argument("Scenario: reference index out of range");
            if (calibration && calibration->constants.size() != geometry.n_elements)
                throw std::invalid_argument("Scenario: imported calibration does not match element count");
            if (calibration)
                calibration->validate();
            if (capture_samples == 0 || capture_samples % adc.lanes != 0)
                throw std::invalid_argument("Scenario: capture length must be a positive multiple of the lane count");
            if (!mismatch.explicit_values.empty() && mismatch.explicit_values.size() != geometry.n_elements)
                throw std::invalid_argument("Scenario: mismatch list does not match element count");
            sweep_grid.validate();
        }

        /// Per-element gain of the elevation sub-array (its broadside array-factor value).
        double element_gain_db() const { return elevation_broadside_gain_db(taper); }

        BeamWeights weights() const
        {
            if (explicit_weights)
                return {*explicit_weights, weights_angle_deg};
            return BeamWeights::steer(geometry, weights_angle_deg, stimulus.rf_freq);
        }

        FrontendConfig frontend_config(std::uint64_t noise_seed) const
        {
            FrontendConfig cfg = frontend;
            cfg.mismatch = mismatch.resolve(geometry.n_elements, seed);
            cfg.noise_seed = noise_seed;
            return cfg;
        }
    };

    /// Far-field plane wave from `doa_deg` on each element: the waveform
    /// (referenced to rf_center, carrying power at the antenna) scaled by the
    /// element gain and azimuth element pattern, phased per element.
    inline std::vector<IqStream> element_inputs(const Scenario &sc, const IqStream &waveform, double doa_deg)
    {
        const double amp = db_to_amplitude(sc.element_gain_db()) *
                           std::sqrt(sc.element_pattern.power_gain(doa_deg));
        const auto steer = steering_vector(sc.geometry, doa_deg, sc.stimulus.rf_freq);
        std::vector<IqStream> out;
        out.reserve(steer.size());
        for (const auto &phasor : steer)
        {
            std::vector<cplx> x = waveform.samples();
            const cplx f = amp * phasor;
            for (auto &v : x)
                v *= f;
            out.emplace_back(std::move(x), waveform.sample_rate(), sc.frontend.rf_center);
        }
        return out;
    }

    /// Carrier at the stimulus frequency, as an envelope around rf_center.
    inline IqStream stimulus_tone(const Scenario &sc, double power_dbm, double sample_rate, std::size_t n)
    {
        auto tone = make_tone(sc.stimulus.rf_freq - sc.frontend.rf_center, sample_rate, power_dbm, 0.0, n);
        return tone.with_center(sc.frontend.rf_center);
    }

    inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
    {
        Rng rng = make_substream_rng(seed, stream);
        return rng();
    }

    /// Broadside capture of a reference tone through every front-end and ADC,
    /// followed by least-squares estimation of the per-channel constants.
    inline CalibrationSet calibrate_scenario(const Scenario &sc, double sample_rate)
    {
        AdcConfig adc = sc.adc;
        adc.sample_rate = sample_rate;
        const auto tone = stimulus_tone(sc, sc.calibration_reference_dbm, sample_rate, sc.capture_samples);
        const auto inputs = element_inputs(sc, tone, 0.0);
        const auto analog = simulate_frontend(inputs, sc.frontend_config(derive_seed(sc.seed, 0xca1)));
        const auto digitized = digitize(analog, adc);
        return estimate_calibration(merge_channels(digitized.frames), sc.reference_index);
    }

    inline CalibrationSet scenario_calibration(const Scenario &sc, double sample_rate)
    {
        if (sc.calibration)
            return *sc.calibration;
        if (!sc.calibrate)
            return CalibrationSet::identity(sc.geometry.n_elements, sc.reference_index);
        return calibrate_scenario(sc, sample_rate);
    }

    struct SweepResult
    {
        Pattern measured;
        Pattern analytic;
        CalibrationSet calibration;
        double measured_peak_deg = 0.0;
        double analytic_peak_deg = 0.0;
        double max_deviation_db = 0.0; // over grid points where either pattern is finite
        std::size_t clipped_samples = 0;
    };

    inline double max_pattern_deviation(const Pattern &a, const Pattern &b)
    {
        if (a.size() != b.size())
            throw std::invalid_argument("max_pattern_deviation: patterns differ in length");
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            const double x = a.magnitude_db[i], y = b.magnitude_db[i];
            if (std::isinf(x) && std::isinf(y))
                continue;
            worst = std::max(worst, std::abs(x - y));
        }
        return worst;
    }

    /// Rotating-receiver emulation: fixed weights, a tone arriving from each
    /// grid angle in turn, energy recorded after calibrate-then-beamform.
    inline SweepResult run_beam_sweep(const Scenario &sc, std::span<const double> doa_grid)
    {
        sc.validate();
        if (sc.stimulus.kind != Stimulus::Kind::tone)
            throw std::invalid_argument("run_beam_sweep: needs a tone stimulus");
        SweepResult r;
        r.calibration = scenario_calibration(sc, sc.adc.sample_rate);
        const auto w = sc.weights();

        std::size_t clipped = 0;
        std::size_t index = 0;
        SweepPipeline pipe;
        pipe.adc = sc.adc;
        pipe.calibration = r.calibration;
        pipe.capture = [&](double doa) {
            const auto tone = stimulus_tone(sc, sc.stimulus.power_dbm, sc.adc.sample_rate, sc.capture_samples);
            const auto inputs = element_inputs(sc, tone, doa);
            auto ch = simulate_frontend(inputs, sc.frontend_config(derive_seed(sc.seed, 0x5000 + index++)));
            for (const auto &s : ch.streams)
            {
                const double v_fs = std::sqrt(dbm_to_watts(sc.adc.full_scale_dbm));
                for (const auto &v : s.samples())
                    clipped += (std::abs(v.real()) > v_fs || std::abs(v.imag()) > v_fs) ? 1 : 0;
            }
            return ch;
        };
        r.measured = beam_energy_sweep(pipe, w, doa_grid);
        if (sc.adc.ideal)
            clipped = 0;
        r.clipped_samples = clipped;

        const std::vector<double> ones(sc.geometry.n_elements, 1.0);
        r.analytic = array_factor(sc.geometry, ones, w.weights, doa_grid, sc.stimulus.rf_freq, sc.element_pattern);
        r.measured_peak_deg = peak_angle(r.measured);
        r.analytic_peak_deg = peak_angle(r.analytic);
        r.max_deviation_db = max_pattern_deviation(r.measured, r.analytic);
        return r;
    }

    inline SweepResult run_beam_sweep(const Scenario &sc) { return run_beam_sweep(sc, sc.sweep_grid.points()); }

    struct ConstellationResult
    {
        std::vector<cplx> received;            // after gain normalization, one per data symbol
        std::vector<std::size_t> transmitted;  // symbol indices
        std::vector<std::size_t> decided;
        std::size_t symbol_errors = 0;
        std::size_t bit_errors = 0;
        std::size_t n_symbols = 0;
        double evm = 0.0;
        double measured_snr_db = 0.0;   // -20 log10(EVM)
        double predicted_snr_db = 0.0;  // per-subcarrier Es/N0 from the link budget
        double required_snr_db = 0.0;   // per-subcarrier Es/N0 for the target Eb/N0
        double element_input_dbm = 0.0; // per-element signal power after the element gain
        cplx channel_gain{0.0, 0.0};    // least-squares end-to-end complex gain that was removed
        std::size_t clipped_samples = 0;
        CalibrationSet calibration;
        BudgetReport budget;

        double margin_db() const { return predicted_snr_db - required_snr_db; }
    };

    /// Single-carrier-per-symbol OFDM link through the whole receiver: plane
    /// wave -> front-ends -> ADC -> lanes -> calibration -> beamforming ->
    /// demodulation. The chain runs at the OFDM sample rate N_FFT * CS. The
    /// received points are normalized by the least-squares complex gain
    /// against the transmitted symbols before EVM and decisions.
    inline ConstellationResult run_constellation(const Scenario &sc)
    {
        sc.validate();
        if (!sc.ofdm || sc.stimulus.kind != Stimulus::Kind::ofdm)
            throw std::invalid_argument("run_constellation: needs an OFDM stimulus and OFDM parameters");
        const OfdmParams p = *sc.ofdm;
        if (p.n_data != 1)
            throw std::invalid_argument("run_constellation: single-subcarrier mode needs n_data = 1");
        const double fs = p.sample_rate();

        ConstellationResult r;
        r.calibration = scenario_calibration(sc, fs);
        const auto w = sc.weights();
        AdcConfig adc = sc.adc;
        adc.sample_rate = fs;
        adc.validate();

        OfdmModem modem(p);
        const QamConstellation qam(p.modulation_order);
        const std::size_t n_ofdm = std::max<std::size_t>(1, sc.link_symbols / p.n_data);
        const std::size_t block = 64;
        Rng sym_rng = make_substream_rng(sc.seed, 0x5e1);
        std::uniform_int_distribution<std::size_t> pick(0, p.modulation_order - 1);

        // Unit-power symbols give a time-domain mean power of N_D / (N_FFT) per sample.
        const double frame_power = static_cast<double>(p.n_data) / static_cast<double>(p.n_fft);
        const double target = dbm_to_watts(sc.stimulus.power_dbm);
        const double scale = std::sqrt(target / frame_power);
        const double v_fs = std::sqrt(dbm_to_watts(adc.full_scale_dbm));

        std::vector<cplx> tx_points;
        std::vector<cplx> rx_points;
        for (std::size_t done = 0, blk = 0; done < n_ofdm; done += block, ++blk)
        {
            const std::size_t count = std::min(block, n_ofdm - done);
            std::vector<cplx> symbols(count * p.n_data);
            for (auto &s : symbols)
            {
                const auto idx = pick(sym_rng);
                r.transmitted.push_back(idx);
                s = qam.point(idx);
            }
            tx_points.insert(tx_points.end(), symbols.begin(), symbols.end());
            auto frame = modem.modulate(symbols);
            for (auto &v : frame.samples)
                v *= scale;
            const IqStream wave(std::move(frame.samples), fs, sc.frontend.rf_center);
            const auto inputs = element_inputs(sc, wave, sc.stimulus.doa_deg);
            const auto analog = simulate_frontend(inputs, sc.frontend_config(derive_seed(sc.seed, 0x10000 + blk)));
            if (!adc.ideal)
                for (const auto &s : analog.streams)
                    for (const auto &v : s.samples())
                        r.clipped_samples += (std::abs(v.real()) > v_fs || std::abs(v.imag()) > v_fs) ? 1 : 0;
            auto digitized = digitize(analog, adc);
            const auto frames = apply_calibration(std::move(digitized.frames), r.calibration);
            const auto beam = polyphase_merge(beamform(frames, w));
            const auto baseband = retune(beam, analog[0].center_freq());
            const auto rx = modem.demodulate(baseband.samples());
            rx_points.insert(rx_points.end(), rx.begin(), rx.end());
        }

        cplx cross = 0.0;
        double power = 0.0;
        for (std::size_t i = 0; i < tx_points.size(); ++i)
        {
            cross += std::conj(tx_points[i]) * rx_points[i];
            power += std::norm(tx_points[i]);
        }
        r.channel_gain = cross / power;
        if (std::abs(r.channel_gain) == 0.0)
            throw std::runtime_error("run_constellation: no signal reached the demodulator");

        r.n_symbols = rx_points.size();
        r.received.resize(r.n_symbols);
        r.decided.resize(r.n_symbols);
        for (std::size_t i = 0; i < r.n_symbols; ++i)
        {
            r.received[i] = rx_points[i] / r.channel_gain;
            r.decided[i] = qam.decide(r.received[i]);
            if (r.decided[i] != r.transmitted[i])
            {
                ++r.symbol_errors;
                r.bit_errors += static_cast<std::size_t>(std::popcount(r.decided[i] ^ r.transmitted[i]));
            }
        }
        r.evm = evm_rms(r.received, tx_points);
        r.measured_snr_db = -20.0 * std::log10(r.evm);

        // Per-bin SNR: signal power per element over N_D subcarriers against
        // kT * CS * F, plus the coherent gain of the array. Calibration equalizes
        // every channel's noise to the reference channel's, so the array gain is
        // the full element count.
        const auto casc = cascade_analysis(sc.frontend.chain, sc.frontend.if_freq());
        r.element_input_dbm = sc.stimulus.power_dbm + sc.element_gain_db();
        const double array_gain_db = 10.0 * std::log10(static_cast<double>(sc.geometry.n_elements));
        r.predicted_snr_db = r.element_input_dbm - 10.0 * std::log10(static_cast<double>(p.n_data)) + array_gain_db -
                             (thermal_noise_power(p.subcarrier_spacing, sc.frontend.temperature_k) + casc.nf_db);
        r.required_snr_db = sc.requirement.ebn0_db + 10.0 * std::log10(p.bits_per_symbol());
        r.budget = budget_report(sc.frontend.chain, p, sc.requirement);
        return r;
    }

    inline BudgetReport run_budget(const Scenario &sc)
    {
        sc.validate();
        return budget_report(sc.frontend.chain, sc.ofdm.value_or(OfdmParams{}), sc.requirement);
    }
}
