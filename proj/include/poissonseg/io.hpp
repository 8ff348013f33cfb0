#pragma once

// Binary tensor container:
//   bytes 0..7   magic "PSEG0001"
//   byte  8      dtype (1 = float32, 2 = float64, 3 = uint8)
//   byte  9      rank
//   then rank x uint32 little-endian dims, then the row-major payload,
//   little-endian. Payload size must match product(dims) x dtype size.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "poissonseg/graph.hpp"
#include "poissonseg/tensor.hpp"

namespace poissonseg {

enum class Dtype : std::uint8_t { Float32 = 1, Float64 = 2, UInt8 = 3 };

inline constexpr std::string_view kTensorMagic = "PSEG0001";
inline constexpr std::size_t kTensorHeaderFixed = 10;

inline std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::Float32: return 4;
    case Dtype::Float64: return 8;
    case Dtype::UInt8: return 1;
  }
  detail::fail(ErrorKind::UnknownDtype, "unknown dtype code");
}

namespace detail {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) v |= static_cast<U>(p[b]) << (8 * b);
  return v;
}

}  // namespace detail

inline std::string encode_tensor(const Tensor& t, Dtype dtype = Dtype::Float64) {
  detail::require(t.rank() >= 1 && t.rank() <= 255, ErrorKind::ShapeMismatch, "tensor rank must be in [1,255]");
  std::string out(kTensorMagic);
  out.push_back(static_cast<char>(dtype));
  out.push_back(static_cast<char>(t.rank()));
  for (std::size_t d : t.dims()) {
    detail::require(d <= std::numeric_limits<std::uint32_t>::max(), ErrorKind::ShapeMismatch,
                    "tensor dim exceeds 32 bits");
    detail::put_le(out, static_cast<std::uint32_t>(d));
  }
  out.reserve(out.size() + t.size() * dtype_size(dtype));
  for (double v : t.data()) {
    switch (dtype) {
      case Dtype::Float64: detail::put_le(out, std::bit_cast<std::uint64_t>(v)); break;
      case Dtype::Float32: detail::put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); break;
      case Dtype::UInt8:
        detail::require(v >= 0.0 && v <= 255.0 && v == std::floor(v), ErrorKind::InvalidArgument,
                        "uint8 tensors hold integers in [0,255]");
        out.push_back(static_cast<char>(static_cast<std::uint8_t>(v)));
        break;
      default: detail::fail(ErrorKind::UnknownDtype, "unknown dtype code");
    }
  }
  return out;
}

/// Decodes a tensor image; 32-bit and 8-bit payloads are widened to double.
inline Tensor decode_tensor(std::string_view bytes) {
  detail::require(bytes.size() >= kTensorMagic.size() && bytes.substr(0, kTensorMagic.size()) == kTensorMagic,
                  ErrorKind::BadMagic, "missing PSEG0001 magic");
  detail::require(bytes.size() >= kTensorHeaderFixed, ErrorKind::TruncatedPayload, "header is truncated");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint8_t code = p[8];
  detail::require(code >= 1 && code <= 3, ErrorKind::UnknownDtype, "unknown dtype code " + std::to_string(code));
  const auto dtype = static_cast<Dtype>(code);
  const std::size_t rank = p[9];
  detail::require(rank >= 1, ErrorKind::ShapeMismatch, "tensor rank must be >= 1");
  const std::size_t header = kTensorHeaderFixed + 4 * rank;
  detail::require(bytes.size() >= header, ErrorKind::TruncatedPayload, "dims are truncated");

  std::vector<std::size_t> dims(rank);
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    dims[i] = detail::get_le<std::uint32_t>(p + kTensorHeaderFixed + 4 * i);
    detail::require(dims[i] > 0, ErrorKind::ShapeMismatch, "tensor dims must be positive");
    count *= dims[i];
  }
  const std::size_t width = dtype_size(dtype);
  const std::size_t payload = bytes.size() - header;
  detail::require(payload >= count * width, ErrorKind::TruncatedPayload,
                  "payload holds " + std::to_string(payload) + " bytes, expected " + std::to_string(count * width));
  detail::require(payload == count * width, ErrorKind::ShapeMismatch,
                  "payload holds " + std::to_string(payload - count * width) + " trailing bytes");

  std::vector<double> data(count);
  const unsigned char* q = p + header;
  for (std::size_t i = 0; i < count; ++i) {
    switch (dtype) {
      case Dtype::Float64: data[i] = std::bit_cast<double>(detail::get_le<std::uint64_t>(q + 8 * i)); break;
      case Dtype::Float32: data[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(q + 4 * i)); break;
      case Dtype::UInt8: data[i] = q[i]; break;
    }
  }
  return Tensor(std::move(dims), std::move(data));
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  detail::require(static_cast<bool>(out), ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  detail::require(static_cast<bool>(out), ErrorKind::IoError, "failed writing " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void save_tensor(const std::filesystem::path& path, const Tensor& t, Dtype dtype = Dtype::Float64) {
  write_file(path, encode_tensor(t, dtype));
}

inline Tensor load_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

/// Rank-2 tensor as a matrix.
inline Matrix tensor_to_matrix(const Tensor& t) {
  detail::require(t.rank() == 2, ErrorKind::ShapeMismatch, "expected a rank-2 tensor");
  return Matrix(t.dims()[0], t.dims()[1], std::vector<double>(t.data().begin(), t.data().end()));
}

inline Tensor matrix_to_tensor(const Matrix& m) {
  return Tensor({m.rows(), m.cols()}, std::vector<double>(m.data().begin(), m.data().end()));
}

/// Edge list tensor (n_edges x 3: i, j, w) with i < j, one row per
/// undirected edge, rows ordered by (i, j).
inline Tensor graph_to_tensor(const WeightedGraph& g) {
  std::vector<double> rows;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (const auto& e : g.neighbors(i))
      if (i < e.col) rows.insert(rows.end(), {static_cast<double>(i), static_cast<double>(e.col), e.weight});
  detail::require(!rows.empty(), ErrorKind::InvalidArgument, "graph has no edges");
  const std::size_t n_edges = rows.size() / 3;
  return Tensor({n_edges, 3}, std::move(rows));
}

/// Inverse of graph_to_tensor. The vertex count is the largest index + 1
/// unless given explicitly.
inline WeightedGraph graph_from_tensor(const Tensor& t, std::size_t vertex_count = 0) {
  detail::require(t.rank() == 2 && t.dims()[1] == 3, ErrorKind::ShapeMismatch, "graph tensor must be n_edges x 3");
  const auto d = t.data();
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
  std::size_t n = vertex_count;
  for (std::size_t r = 0; r < t.dims()[0]; ++r) {
    const double fi = d[3 * r], fj = d[3 * r + 1];
    detail::require(fi >= 0 && fj >= 0 && fi == std::floor(fi) && fj == std::floor(fj), ErrorKind::InvalidArgument,
                    "edge endpoints must be nonnegative integers");
    const auto i = static_cast<std::size_t>(fi), j = static_cast<std::size_t>(fj);
    edges.emplace_back(i, j, d[3 * r + 2]);
    if (vertex_count == 0) n = std::max(n, std::max(i, j) + 1);
  }
  return WeightedGraph::from_edges(n, edges);
}

}  // namespace poissonseg
