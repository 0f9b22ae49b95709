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

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace mmrx
{
    /// Unitary DFT of fixed length backed by an FFTW plan. One instance must not
    /// be shared across threads, and FFTW planning itself is not thread-safe.
    class FftPlan
    {
    public:
        enum class Direction
        {
            forward,
            inverse
        };

        FftPlan(std::size_t n, Direction dir) : n_(n), buffer_(n)
        {
            if (n == 0)
                throw std::invalid_argument("FftPlan: length must be positive");
            auto *buf = reinterpret_cast<fftw_complex *>(buffer_.data());
            plan_.reset(fftw_plan_dft_1d(static_cast<int>(n), buf, buf,
                                         dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE));
            if (!plan_)
                throw std::runtime_error("FftPlan: FFTW plan creation failed");
            scale_ = 1.0 / std::sqrt(static_cast<double>(n));
        }

        std::size_t size() const noexcept { return n_; }

        void execute(std::span<const std::complex<double>> in, std::span<std::complex<double>> out)
        {
            if (in.size() != n_ || out.size() != n_)
                throw std::invalid_argument("FftPlan: length mismatch");
            std::copy(in.begin(), in.end(), buffer_.begin());
            fftw_execute(plan_.get());
            for (std::size_t i = 0; i < n_; ++i)
                out[i] = buffer_[i] * scale_;
        }

        std::vector<std::complex<double>> operator()(std::span<const std::complex<double>> in)
        {
            std::vector<std::complex<double>> out(n_);
            execute(in, out);
            return out;
        }

    private:
        struct PlanDeleter
        {
            void operator()(fftw_plan_s *p) const { fftw_destroy_plan(p); }
        };

        std::size_t n_;
        double scale_ = 1.0;
        std::vector<std::complex<double>> buffer_;
        std::unique_ptr<fftw_plan_s, PlanDeleter> plan_;
    };

    inline std::vector<std::complex<double>> unitary_dft(std::span<const std::complex<double>> x)
    {
        FftPlan plan(x.size(), FftPlan::Direction::forward);
        return plan(x);
    }
}
