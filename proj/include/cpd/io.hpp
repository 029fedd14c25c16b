// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpd/kruskal.hpp"
#include "cpd/solvers.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

struct file_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

    unsigned char u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }

    void magic(const char* expected) {
        need(4);
        for (int i = 0; i < 4; ++i)
            if (bytes_[pos_ + i] != static_cast<unsigned char>(expected[i]))
                throw format_error("bad magic, expected " + std::string(expected));
        pos_ += 4;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw format_error("truncated payload");
    }
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// ---- tensor files (magic CPDT) ---------------------------------------------

inline std::vector<unsigned char> encode_tensor(const DenseTensor& t) {
    std::vector<unsigned char> out = {'C', 'P', 'D', 'T', 1};
    out.push_back(static_cast<unsigned char>(t.order()));
    for (std::size_t d : t.shape().dims()) detail::put_u64(out, d);
    for (double v : t.values()) detail::put_f64(out, v);
    return out;
}

inline DenseTensor decode_tensor(std::span<const unsigned char> bytes) {
    detail::ByteReader r(bytes);
    r.magic("CPDT");
    if (r.u8() != 1) throw format_error("unsupported tensor file version");
    const std::size_t order = r.u8();
    if (order == 0) throw format_error("tensor file order must be >= 1");
    std::vector<std::size_t> dims(order);
    for (auto& d : dims) {
        const std::uint64_t v = r.u64();
        if (v == 0) throw format_error("tensor file extent must be >= 1");
        d = static_cast<std::size_t>(v);
    }
    Shape shape(dims);
    std::vector<double> values(shape.element_count());
    for (auto& v : values) {
        v = r.f64();
        if (!std::isfinite(v)) throw format_error("tensor payload contains a non-finite value");
    }
    if (!r.exhausted()) throw format_error("trailing bytes after tensor payload");
    return DenseTensor(std::move(shape), std::move(values));
}

// ---- model files (magic CPDF) ----------------------------------------------

inline std::vector<unsigned char> encode_model(const KruskalModel& m, const Shape& shape) {
    if (m.order() != shape.order())
        throw std::invalid_argument("encode_model: model order does not match shape");
    std::vector<unsigned char> out = {'C', 'P', 'D', 'F', 1};
    out.push_back(static_cast<unsigned char>(m.order()));
    detail::put_u32(out, static_cast<std::uint32_t>(m.rank()));
    for (std::size_t d : shape.dims()) detail::put_u64(out, d);
    for (double w : m.lambda) detail::put_f64(out, w);
    for (const auto& f : m.factors)
        for (double v : f.values()) detail::put_f64(out, v);
    return out;
}

struct DecodedModel {
    KruskalModel model;
    Shape shape;
};

inline DecodedModel decode_model(std::span<const unsigned char> bytes) {
    detail::ByteReader r(bytes);
    r.magic("CPDF");
    if (r.u8() != 1) throw format_error("unsupported model file version");
    const std::size_t order = r.u8();
    if (order == 0) throw format_error("model file order must be >= 1");
    const std::size_t rank = r.u32();
    if (rank == 0) throw format_error("model file rank must be >= 1");
    std::vector<std::size_t> dims(order);
    for (auto& d : dims) {
        const std::uint64_t v = r.u64();
        if (v == 0) throw format_error("model file extent must be >= 1");
        d = static_cast<std::size_t>(v);
    }
    KruskalModel m;
    m.lambda.resize(rank);
    for (auto& w : m.lambda) {
        w = r.f64();
        if (!std::isfinite(w) || w < 0.0) throw format_error("model weights must be >= 0");
    }
    for (std::size_t k = 0; k < order; ++k) {
        Matrix f(dims[k], rank);
        for (std::size_t i = 0; i < f.size(); ++i) {
            f.data()[i] = r.f64();
            if (!std::isfinite(f.data()[i]))
                throw format_error("model payload contains a non-finite value");
        }
        m.factors.push_back(std::move(f));
    }
    if (!r.exhausted()) throw format_error("trailing bytes after model payload");
    return {std::move(m), Shape(dims)};
}

// ---- whole-file helpers ------------------------------------------------------

inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw file_error("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) throw file_error("read failure on " + path);
    return bytes;
}

inline void write_file(const std::string& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw file_error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw file_error("write failure on " + path);
}

inline void write_tensor_file(const std::string& path, const DenseTensor& t) {
    write_file(path, encode_tensor(t));
}

inline DenseTensor read_tensor_file(const std::string& path) {
    return decode_tensor(read_file(path));
}

inline void write_model_file(const std::string& path, const KruskalModel& m,
                             const Shape& shape) {
    write_file(path, encode_model(m, shape));
}

inline DecodedModel read_model_file(const std::string& path) {
    return decode_model(read_file(path));
}

// ---- trace CSV ----------------------------------------------------------------

inline std::string trace_order_string(const std::vector<std::size_t>& order) {
    std::string s;
    for (std::size_t m : order) s += std::to_string(m + 1);
    return s;
}

inline std::string format_trace_csv(const std::vector<TraceRow>& rows) {
    std::ostringstream out;
    out << "iter,order,fitness,raw_radicand,seconds,root_ttms,flops,beta,regularized\n";
    for (const auto& r : rows) {
        char seconds[32];
        std::snprintf(seconds, sizeof seconds, "%.6f", r.wall_seconds);
        out << r.iteration << ',' << trace_order_string(r.update_order) << ','
            << detail::format_double(r.fitness) << ','
            << detail::format_double(r.raw_radicand) << ',' << seconds << ','
            << r.root_ttm_count << ',' << r.flops << ','
            << detail::format_double(r.beta_used) << ',' << (r.regularized ? 1 : 0) << '\n';
    }
    return out.str();
}

inline void write_trace_file(const std::string& path, const std::vector<TraceRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw file_error("cannot open " + path + " for writing");
    out << format_trace_csv(rows);
    if (!out) throw file_error("write failure on " + path);
}

inline std::vector<TraceRow> parse_trace_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        line != "iter,order,fitness,raw_radicand,seconds,root_ttms,flops,beta,regularized")
        throw format_error("trace file: bad header");
    std::vector<TraceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        fields.push_back(cur);
        if (fields.size() != 9) throw format_error("trace file: bad row");
        TraceRow r;
        r.iteration = std::stoull(fields[0]);
        for (char c : fields[1]) {
            if (c < '1' || c > '9') throw format_error("trace file: bad order digits");
            r.update_order.push_back(static_cast<std::size_t>(c - '1'));
        }
        r.fitness = std::stod(fields[2]);
        r.raw_radicand = std::stod(fields[3]);
        r.wall_seconds = std::stod(fields[4]);
        r.root_ttm_count = std::stoull(fields[5]);
        r.flops = std::stoull(fields[6]);
        r.beta_used = std::stod(fields[7]);
        r.regularized = fields[8] == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace cpd
