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

#include "mmrx/fft.hpp"
#include "mmrx/link_budget.hpp"
#include "mmrx/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace mmrx
{
    /// Gray-coded square QAM with unit average power.
    ///
    /// A symbol's log2(M) bits are read MSB first; the first half selects the
    /// in-phase level and the second half the quadrature level. Each half is a
    /// Gray code over the rail levels, with all-zeros on the most positive
    /// level, so for M = 4 the bits 00 map to (+1 + j)/sqrt(2).
    class QamConstellation
    {
    public:
        explicit QamConstellation(std::size_t order) : order_(order)
        {
            if (order != 4 && order != 16 && order != 64 && order != 256 && order != 1024)
                throw std::invalid_argument("QamConstellation: order must be 4, 16, 64, 256 or 1024");
            bits_ = static_cast<unsigned>(std::lround(std::log2(static_cast<double>(order))));
            rail_bits_ = bits_ / 2;
            rail_levels_ = std::size_t{1} << rail_bits_;
            scale_ = std::sqrt(3.0 / (2.0 * (static_cast<double>(order) - 1.0)));
        }

        std::size_t order() const noexcept { return order_; }
        unsigned bits_per_symbol() const noexcept { return bits_; }

        /// Point for symbol index `index` (its bits, MSB first).
        cplx point(std::size_t index) const
        {
            const std::size_t mask = rail_levels_ - 1;
            const auto i_code = (index >> rail_bits_) & mask;
            const auto q_code = index & mask;
            return cplx(level(i_code), level(q_code)) * scale_;
        }

        /// Nearest-neighbour hard decision, returned as a symbol index.
        std::size_t decide(cplx y) const
        {
            return (rail_code(y.real()) << rail_bits_) | rail_code(y.imag());
        }

    private:
        static std::size_t gray_to_binary(std::size_t g)
        {
            for (std::size_t shift = 1; shift < 8 * sizeof(g); shift <<= 1)
                g ^= g >> shift;
            return g;
        }

        double level(std::size_t code) const
        {
            const auto idx = gray_to_binary(code);
            return static_cast<double>(rail_levels_ - 1) - 2.0 * static_cast<double>(idx);
        }

        std::size_t rail_code(double v) const
        {
            const double top = static_cast<double>(rail_levels_ - 1);
            const double idx = std::clamp(std::round((top - v / scale_) / 2.0), 0.0, top);
            const auto b = static_cast<std::size_t>(idx);
            return b ^ (b >> 1);
        }

        std::size_t order_;
        unsigned bits_ = 0;
        unsigned rail_bits_ = 0;
        std::size_t rail_levels_ = 0;
        double scale_ = 1.0;
    };

    struct QamSymbolBlock
    {
        std::vector<cplx> symbols;
        std::size_t order = 64;
    };

    inline QamSymbolBlock qam_map(std::span<const std::uint8_t> bits, std::size_t order)
    {
        const QamConstellation qam(order);
        const unsigned k = qam.bits_per_symbol();
        if (bits.size() % k != 0)
            throw std::invalid_argument("qam_map: bit count must be a multiple of log2(M)");
        QamSymbolBlock block;
        block.order = order;
        block.symbols.resize(bits.size() / k);
        for (std::size_t s = 0; s < block.symbols.size(); ++s)
        {
            std::size_t index = 0;
            for (unsigned b = 0; b < k; ++b)
                index = (index << 1) | (bits[s * k + b] & 1u);
            block.symbols[s] = qam.point(index);
        }
        return block;
    }

    inline std::vector<std::size_t> qam_decide(std::span<const cplx> symbols, std::size_t order)
    {
        const QamConstellation qam(order);
        std::vector<std::size_t> out(symbols.size());
        for (std::size_t i = 0; i < symbols.size(); ++i)
            out[i] = qam.decide(symbols[i]);
        return out;
    }

    inline std::vector<std::uint8_t> qam_demap(std::span<const cplx> symbols, std::size_t order)
    {
        const QamConstellation qam(order);
        const unsigned k = qam.bits_per_symbol();
        std::vector<std::uint8_t> bits(symbols.size() * k);
        for (std::size_t s = 0; s < symbols.size(); ++s)
        {
            const auto index = qam.decide(symbols[s]);
            for (unsigned b = 0; b < k; ++b)
                bits[s * k + b] = static_cast<std::uint8_t>((index >> (k - 1 - b)) & 1u);
        }
        return bits;
    }

    inline std::vector<std::uint8_t> qam_demap(const QamSymbolBlock &block)
    {
        return qam_demap(block.symbols, block.order);
    }

    /// Signed FFT bins carrying data: N_D bins centred on DC with DC itself
    /// unused, ordered from the most negative frequency upwards. For odd N_D
    /// the extra bin goes to the positive side.
    inline std::vector<int> active_bins(const OfdmParams &p)
    {
        p.validate_modem();
        const int n_neg = static_cast<int>(p.n_data / 2);
        const int n_pos = static_cast<int>(p.n_data) - n_neg;
        std::vector<int> bins;
        bins.reserve(p.n_data);
        for (int b = -n_neg; b <= -1; ++b)
            bins.push_back(b);
        for (int b = 1; b <= n_pos; ++b)
            bins.push_back(b);
        return bins;
    }

    struct OfdmFrame
    {
        std::vector<cplx> samples; // OFDM symbols back to back, each with its cyclic prefix
        OfdmParams params;
        std::size_t n_symbols = 0;

        double sample_rate() const { return params.sample_rate(); }
        IqStream to_stream(double center_freq = 0.0) const { return IqStream(samples, sample_rate(), center_freq); }
    };

    /// OFDM modulator/demodulator with unitary transforms, so a symbol's
    /// useful-part energy equals the energy of its active bins.
    class OfdmModem
    {
    public:
        explicit OfdmModem(const OfdmParams &p)
            : params_(p), bins_(active_bins(p)), cp_(p.cyclic_prefix_length()),
              ifft_(p.n_fft, FftPlan::Direction::inverse), fft_(p.n_fft, FftPlan::Direction::forward)
        {
        }

        const OfdmParams &params() const noexcept { return params_; }
        const std::vector<int> &bins() const noexcept { return bins_; }
        std::size_t symbol_length() const noexcept { return params_.n_fft + cp_; }

        OfdmFrame modulate(std::span<const cplx> symbols)
        {
            const std::size_t nd = params_.n_data, nfft = params_.n_fft;
            if (symbols.empty() || symbols.size() % nd != 0)
                throw std::invalid_argument("ofdm_modulate: symbol count must be a positive multiple of N_D");
            OfdmFrame frame;
            frame.params = params_;
            frame.n_symbols = symbols.size() / nd;
            frame.samples.resize(frame.n_symbols * symbol_length());
            std::vector<cplx> freq(nfft), time(nfft);
            for (std::size_t s = 0; s < frame.n_symbols; ++s)
            {
                std::fill(freq.begin(), freq.end(), cplx(0.0, 0.0));
                for (std::size_t k = 0; k < nd; ++k)
                    freq[bin_index(bins_[k])] = symbols[s * nd + k];
                ifft_.execute(freq, time);
                auto *out = frame.samples.data() + s * symbol_length();
                std::copy(time.end() - static_cast<std::ptrdiff_t>(cp_), time.end(), out);
                std::copy(time.begin(), time.end(), out + cp_);
            }
            return frame;
        }

        std::vector<cplx> demodulate(std::span<const cplx> samples)
        {
            const std::size_t nd = params_.n_data, nfft = params_.n_fft;
            if (samples.size() % symbol_length() != 0)
                throw std::invalid_argument("ofdm_demodulate: sample count is not a whole number of symbols");
            const std::size_t n_sym = samples.size() / symbol_length();
            std::vector<cplx> out(n_sym * nd);
            std::vector<cplx> freq(nfft);
            for (std::size_t s = 0; s < n_sym; ++s)
            {
                const auto useful = samples.subspan(s * symbol_length() + cp_, nfft);
                fft_.execute(useful, freq);
                for (std::size_t k = 0; k < nd; ++k)
                    out[s * nd + k] = freq[bin_index(bins_[k])];
            }
            return out;
        }

        /// Absolute frequency offset (Hz) of data bin `k` relative to the centre.
        double bin_frequency(std::size_t k) const { return bins_.at(k) * params_.subcarrier_spacing; }

    private:
        std::size_t bin_index(int bin) const
        {
            const auto n = static_cast<int>(params_.n_fft);
            return static_cast<std::size_t>((bin % n + n) % n);
        }

        OfdmParams params_;
        std::vector<int> bins_;
        std::size_t cp_;
        FftPlan ifft_;
        FftPlan fft_;
    };

    inline OfdmFrame ofdm_modulate(const QamSymbolBlock &block, const OfdmParams &p)
    {
        OfdmModem modem(p);
        return modem.modulate(block.symbols);
    }

    inline QamSymbolBlock ofdm_demodulate(const OfdmFrame &frame, const OfdmParams &p)
    {
        OfdmModem modem(p);
        return {modem.demodulate(frame.samples), p.modulation_order};
    }

    /// Adds complex Gaussian noise at `snr_db` relative to the measured mean
    /// power of `x`. Infinite SNR leaves the samples untouched.
    inline std::vector<cplx> awgn(std::vector<cplx> x, double snr_db, std::uint64_t seed)
    {
        if (std::isnan(snr_db))
            throw std::invalid_argument("awgn: SNR must not be NaN");
        if (snr_db == std::numeric_limits<double>::infinity() || x.empty())
            return x;
        const double noise = mean_power_watts(x) / db_to_linear(snr_db);
        Rng rng(seed);
        add_complex_noise(x, noise, rng);
        return x;
    }

    inline IqStream awgn(const IqStream &s, double snr_db, std::uint64_t seed)
    {
        return s.with_samples(awgn(s.samples(), snr_db, seed));
    }

    /// RMS error vector magnitude relative to the RMS of the reference points.
    inline double evm_rms(std::span<const cplx> received, std::span<const cplx> reference)
    {
        if (received.size() != reference.size() || received.empty())
            throw std::invalid_argument("evm_rms: sizes differ or are empty");
        double err = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < received.size(); ++i)
        {
            err += std::norm(received[i] - reference[i]);
            ref += std::norm(reference[i]);
        }
        return std::sqrt(err / ref);
    }

    inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

    /// Uncoded Gray-mapped square M-QAM bit error rate in AWGN (nearest-neighbour approximation).
    inline double theoretical_qam_ber(std::size_t order, double ebn0_db)
    {
        const double m = static_cast<double>(order);
        const double sq = std::sqrt(m);
        if (order < 4 || sq != std::floor(sq))
            throw std::invalid_argument("theoretical_qam_ber: M must be a square QAM order");
        const double k = std::log2(m);
        const double ebn0 = db_to_linear(ebn0_db);
        return (4.0 / k) * (1.0 - 1.0 / sq) * q_function(std::sqrt(3.0 * k * ebn0 / (m - 1.0)));
    }

    struct BerResult
    {
        double ber = 0.0;
        std::size_t bit_errors = 0;
        std::size_t n_bits = 0;
        double evm = 0.0;
        std::vector<cplx> constellation; // equalizer-free received points (optionally kept)
        std::vector<std::size_t> decided;
    };

    /// Random bits -> QAM -> OFDM -> AWGN -> OFDM demodulation -> hard decisions.
    ///
    /// Eb/N0 is referred to the useful (post cyclic-prefix) part of each symbol:
    /// the time-domain noise variance is 1 / (log2(M) * Eb/N0) for unit-power
    /// constellation points, so per-bin Es/N0 = log2(M) * Eb/N0. `n_bits` is
    /// rounded up to whole OFDM symbols.
    inline BerResult ber_test(const OfdmParams &p, double ebn0_db, std::size_t n_bits, std::uint64_t seed,
                              bool keep_constellation = false, std::size_t keep_limit = 100000)
    {
        p.validate_modem();
        OfdmModem modem(p);
        const QamConstellation qam(p.modulation_order);
        const std::size_t k = qam.bits_per_symbol();
        const std::size_t bits_per_ofdm = k * p.n_data;
        const std::size_t n_ofdm = std::max<std::size_t>(1, (n_bits + bits_per_ofdm - 1) / bits_per_ofdm);
        const std::size_t chunk = std::max<std::size_t>(1, std::min<std::size_t>(n_ofdm, 256));

        Rng bit_rng = make_substream_rng(seed, 1);
        Rng noise_rng = make_substream_rng(seed, 2);
        std::bernoulli_distribution coin(0.5);
        const bool noiseless = ebn0_db == std::numeric_limits<double>::infinity();
        const double noise_power = noiseless ? 0.0 : 1.0 / (static_cast<double>(k) * db_to_linear(ebn0_db));

        BerResult r;
        double err_energy = 0.0, ref_energy = 0.0;
        for (std::size_t done = 0; done < n_ofdm; done += chunk)
        {
            const std::size_t count = std::min(chunk, n_ofdm - done);
            std::vector<std::uint8_t> bits(count * bits_per_ofdm);
            for (auto &b : bits)
                b = coin(bit_rng) ? 1 : 0;
            const auto tx = qam_map(bits, p.modulation_order);
            auto frame = modem.modulate(tx.symbols);
            add_complex_noise(frame.samples, noise_power, noise_rng);
            const auto rx = modem.demodulate(frame.samples);
            const auto rx_bits = qam_demap(rx, p.modulation_order);
            for (std::size_t i = 0; i < bits.size(); ++i)
                r.bit_errors += (bits[i] != rx_bits[i]) ? 1 : 0;
            for (std::size_t i = 0; i < rx.size(); ++i)
            {
                err_energy += std::norm(rx[i] - tx.symbols[i]);
                ref_energy += std::norm(tx.symbols[i]);
                if (keep_constellation && r.constellation.size() < keep_limit)
                {
                    r.constellation.push_back(rx[i]);
                    r.decided.push_back(qam.decide(rx[i]));
                }
            }
            r.n_bits += bits.size();
        }
        r.ber = static_cast<double>(r.bit_errors) / static_cast<double>(r.n_bits);
        r.evm = std::sqrt(err_energy / ref_energy);
        return r;
    }
}
