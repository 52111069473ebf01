#pragma once

// JSON (de)serialization for channels, boxes, superchannels, and extended
// reals.  Complex numbers are always [re, im] pairs; matrices are arrays of
// rows; dimensions are always explicit fields and validated against the data,
// never inferred.  Parse failures throw ParseError with the offending file
// and field in the message.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <boxdist/extended_real.hpp>
#include <boxdist/qobjects.hpp>

namespace boxdist {

using Json = nlohmann::json;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail_ser {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

inline const Json& field(const Json& j, const char* name, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const auto it = j.find(name);
  if (it == j.end()) fail(where, std::string("missing field '") + name + "'");
  return *it;
}

inline int int_field(const Json& j, const char* name, const std::string& where) {
  const Json& f = field(j, name, where);
  if (!f.is_number_integer())
    fail(where + "." + name, "expected an integer");
  const long long v = f.get<long long>();
  if (v < 1 || v > 1 << 20) fail(where + "." + name, "dimension out of range");
  return static_cast<int>(v);
}

inline Complex complex_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    fail(where, "expected a complex entry as a [re, im] pair");
  return Complex(j[0].get<double>(), j[1].get<double>());
}

}  // namespace detail_ser

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j)
      row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix matrix_from_json(const Json& j, int rows, int cols,
                                      const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    detail_ser::fail(where, "expected a matrix with " + std::to_string(rows) + " rows");
  ComplexMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const Json& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      detail_ser::fail(where + "[" + std::to_string(i) + "]",
                       "expected a row of " + std::to_string(cols) + " entries");
    for (int k = 0; k < cols; ++k)
      m(i, k) = detail_ser::complex_from_json(
          row[k], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  return m;
}

inline Json extended_to_json(const ExtendedReal& v) {
  if (v.is_pos_inf()) return Json("+inf");
  if (v.is_neg_inf()) return Json("-inf");
  return Json(v.value);
}

inline ExtendedReal extended_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return ExtendedReal(j.get<double>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "+inf") return ExtendedReal::pos_inf();
    if (s == "-inf") return ExtendedReal::neg_inf();
  }
  detail_ser::fail(where, "expected a number or \"+inf\"/\"-inf\"");
}

// Channels serialize canonically through their Choi matrix; any of the five
// input kinds (kraus, choi, replacer, cq, unitary) is accepted on parse.
inline Json channel_to_json(const Channel& ch) {
  Json j;
  j["kind"] = "choi";
  j["in_dim"] = ch.in_dim;
  j["out_dim"] = ch.out_dim;
  j["choi"] = matrix_to_json(ch.choi.mat);
  return j;
}

inline Channel channel_from_json(const Json& j, const std::string& where) {
  using detail_ser::fail;
  using detail_ser::field;
  const Json& kind_j = field(j, "kind", where);
  if (!kind_j.is_string()) fail(where + ".kind", "expected a string");
  const std::string kind = kind_j.get<std::string>();
  const int din = detail_ser::int_field(j, "in_dim", where);
  const int dout = detail_ser::int_field(j, "out_dim", where);
  try {
    if (kind == "choi") {
      const ComplexMatrix g = matrix_from_json(field(j, "choi", where), din * dout,
                                               din * dout, where + ".choi");
      ChannelChecks checks;
      checks.repair = true;
      return make_channel(g, din, dout, checks);
    }
    if (kind == "kraus") {
      const Json& ks = field(j, "kraus", where);
      if (!ks.is_array() || ks.empty()) fail(where + ".kraus", "expected a nonempty array");
      std::vector<ComplexMatrix> kraus;
      for (std::size_t i = 0; i < ks.size(); ++i)
        kraus.push_back(matrix_from_json(ks[i], dout, din,
                                         where + ".kraus[" + std::to_string(i) + "]"));
      return channel_from_kraus(kraus);
    }
    if (kind == "replacer") {
      const ComplexMatrix s =
          matrix_from_json(field(j, "state", where), dout, dout, where + ".state");
      return replacer_channel(din, HermitianOperator(s, {dout}, 1e-8));
    }
    if (kind == "unitary") {
      const ComplexMatrix u =
          matrix_from_json(field(j, "unitary", where), dout, din, where + ".unitary");
      return unitary_channel(u);
    }
    if (kind == "cq") {
      const Json& ss = field(j, "states", where);
      if (!ss.is_array() || static_cast<int>(ss.size()) != din)
        fail(where + ".states", "expected " + std::to_string(din) + " states");
      std::vector<ComplexMatrix> states;
      for (std::size_t i = 0; i < ss.size(); ++i)
        states.push_back(matrix_from_json(ss[i], dout, dout,
                                          where + ".states[" + std::to_string(i) + "]"));
      ChannelChecks checks;
      checks.repair = true;
      return cq_channel(states, checks);
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where, std::string("invalid channel data: ") + e.what());
  }
  fail(where + ".kind", "unknown kind '" + kind +
                            "' (expected kraus, choi, replacer, cq, or unitary)");
}

inline Json box_to_json(const ChannelBox& box) {
  Json j;
  j["first"] = channel_to_json(box.first);
  j["second"] = channel_to_json(box.second);
  return j;
}

inline ChannelBox box_from_json(const Json& j, const std::string& where) {
  const Channel first =
      channel_from_json(detail_ser::field(j, "first", where), where + ".first");
  const Channel second =
      channel_from_json(detail_ser::field(j, "second", where), where + ".second");
  try {
    return ChannelBox(first, second);
  } catch (const std::exception& e) {
    detail_ser::fail(where, std::string("invalid box: ") + e.what());
  }
}

inline Json superchannel_to_json(const Superchannel& sc) {
  Json j;
  j["dims"] = Json::array({sc.c_dim, sc.b_dim, sc.a_dim, sc.d_dim});
  j["choi"] = matrix_to_json(sc.choi.mat);
  return j;
}

inline Superchannel superchannel_from_json(const Json& j, const std::string& where) {
  using detail_ser::fail;
  const Json& dims = detail_ser::field(j, "dims", where);
  if (!dims.is_array() || dims.size() != 4) fail(where + ".dims", "expected [dC, dB, dA, dD]");
  int d[4];
  for (int i = 0; i < 4; ++i) {
    if (!dims[i].is_number_integer() || dims[i].get<long long>() < 1)
      fail(where + ".dims", "dimensions must be positive integers");
    d[i] = dims[i].get<int>();
  }
  const int total = d[0] * d[1] * d[2] * d[3];
  const ComplexMatrix g =
      matrix_from_json(detail_ser::field(j, "choi", where), total, total, where + ".choi");
  try {
    return Superchannel(d[0], d[1], d[2], d[3],
                        HermitianOperator(g, {d[0], d[1], d[2], d[3]}, 1e-6));
  } catch (const std::exception& e) {
    fail(where, std::string("invalid superchannel: ") + e.what());
  }
}

inline HermitianOperator state_from_json(const Json& j, const char* name, int dim,
                                         const std::string& where) {
  const ComplexMatrix m = matrix_from_json(detail_ser::field(j, name, where), dim, dim,
                                           where + "." + name);
  try {
    return HermitianOperator(m, {dim}, 1e-8);
  } catch (const std::exception& e) {
    detail_ser::fail(where + "." + name, std::string("invalid state: ") + e.what());
  }
}

// FNV-1a hash of the canonical dump of the parsed inputs, reported so reruns
// can be matched to the exact inputs they used.
inline std::string digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace boxdist
