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
#include "mmrx/signal.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmrx::io
{
    namespace fs = std::filesystem;

    // Non-finite values are written as "-inf"/"inf"/"nan" so the files stay
    // loadable by numpy and pandas.
    inline void write_number(std::ostream &os, double v)
    {
        if (std::isnan(v))
            os << "nan";
        else if (std::isinf(v))
            os << (v < 0 ? "-inf" : "inf");
        else
            os << v;
    }

    inline std::ofstream open_output(const fs::path &path, std::ios::openmode mode = std::ios::out)
    {
        if (path.has_parent_path())
            fs::create_directories(path.parent_path());
        std::ofstream f(path, mode);
        if (!f)
            throw std::runtime_error("cannot open '" + path.string() + "' for writing");
        f << std::setprecision(10);
        return f;
    }

    inline void write_pattern_csv(std::ostream &os, const Pattern &p, const char *value_column = "magnitude_db",
                                  const char *angle_column = "angle_deg")
    {
        os << angle_column << ',' << value_column << '\n';
        for (std::size_t i = 0; i < p.angles_deg.size(); ++i)
        {
            os << p.angles_deg[i] << ',';
            write_number(os, p.magnitude_db[i]);
            os << '\n';
        }
    }

    inline void write_pattern_csv(const fs::path &path, const Pattern &p)
    {
        auto f = open_output(path);
        write_pattern_csv(f, p);
    }

    inline void write_sweep_csv(const fs::path &path, const Pattern &p)
    {
        auto f = open_output(path);
        write_pattern_csv(f, p, "energy_db", "doa_deg");
    }

    inline void write_constellation_csv(const fs::path &path, std::span<const cplx> points,
                                        std::span<const std::size_t> decided)
    {
        if (points.size() != decided.size())
            throw std::invalid_argument("constellation: points and decisions differ in length");
        auto f = open_output(path);
        f << "re,im,decided_symbol\n";
        for (std::size_t i = 0; i < points.size(); ++i)
            f << points[i].real() << ',' << points[i].imag() << ',' << decided[i] << '\n';
    }

    struct BerRow
    {
        double ebn0_db = 0.0;
        double ber = 0.0;
        double evm = 0.0;
    };

    inline void write_ber_csv(const fs::path &path, std::span<const BerRow> rows)
    {
        auto f = open_output(path);
        f << "ebn0_db,ber,evm\n";
        for (const auto &r : rows)
        {
            f << r.ebn0_db << ',';
            write_number(f, r.ber);
            f << ',';
            write_number(f, r.evm);
            f << '\n';
        }
    }

    inline void write_json(const fs::path &path, const nlohmann::json &j)
    {
        auto f = open_output(path);
        f << j.dump(2) << '\n';
    }

    /// Raw IQ dump: interleaved little-endian float32 (I, Q) pairs, plus a
    /// JSON sidecar at `<path>.json` holding rate, center and length.
    inline void write_iq(const fs::path &path, const IqStream &s)
    {
        auto f = open_output(path, std::ios::out | std::ios::binary);
        std::vector<unsigned char> buf(s.size() * 8);
        auto put = [&](std::size_t at, float v) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            for (int b = 0; b < 4; ++b)
                buf[at + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
        };
        for (std::size_t i = 0; i < s.size(); ++i)
        {
            put(8 * i, static_cast<float>(s.samples()[i].real()));
            put(8 * i + 4, static_cast<float>(s.samples()[i].imag()));
        }
        f.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));

        nlohmann::json side = {{"format", "cf32_le"},
                               {"sample_rate_hz", s.sample_rate()},
                               {"center_freq_hz", s.center_freq()},
                               {"length", s.size()}};
        write_json(fs::path(path.string() + ".json"), side);
    }

    inline IqStream read_iq(const fs::path &path)
    {
        std::ifstream side(fs::path(path.string() + ".json"));
        if (!side)
            throw std::runtime_error("missing IQ sidecar for '" + path.string() + "'");
        const auto meta = nlohmann::json::parse(side);
        const auto n = meta.at("length").get<std::size_t>();

        std::ifstream f(path, std::ios::binary);
        std::vector<unsigned char> buf(n * 8);
        if (!f.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size())))
            throw std::runtime_error("short IQ file '" + path.string() + "'");
        auto get = [&](std::size_t at) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b)
                bits |= static_cast<std::uint32_t>(buf[at + static_cast<std::size_t>(b)]) << (8 * b);
            return static_cast<double>(std::bit_cast<float>(bits));
        };
        std::vector<cplx> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = {get(8 * i), get(8 * i + 4)};
        return IqStream(std::move(x), meta.at("sample_rate_hz").get<double>(), meta.at("center_freq_hz").get<double>());
    }
}
