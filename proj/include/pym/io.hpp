/// @file io.hpp
/// Deterministic artifact plumbing: number/CSV/JSON formatting, a stable
/// content hash, whole-file text IO, and a self-describing binary snapshot
/// for lattice fields.
///
/// Everything here is pinned for golden-file testing:
///   * numbers print via std::to_chars (shortest round-trip form, '.'
///     decimal, locale-free);
///   * CSV quotes per RFC 4180 and terminates records with '\n';
///   * JSON is emitted with sorted keys, two-space indent and a trailing
///     newline, so identical inputs give identical bytes;
///   * snapshots are the magic line "PYMF1", one line of JSON metadata, then
///     the raw payload as little-endian 64-bit floats in storage order
///     (site-major, components in lexicographic multi-index order, algebra
///     colors innermost).
#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pym/lattice.hpp"

namespace pym {

using Json = nlohmann::json;

// ============================================================
// Number and text formatting
// ============================================================

/// Shortest decimal form that parses back to the same double ("0.1", not
/// "0.10000000000000001"); nan/inf print as "nan"/"inf".
inline std::string format_num(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_num(int x) { return std::to_string(x); }
inline std::string format_num(std::size_t x) { return std::to_string(x); }

/// RFC 4180 field quoting: wrap in double quotes when the field contains a
/// comma, quote, CR or LF; embedded quotes double.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// One CSV record: escaped fields joined by ',' with a '\n' terminator.
inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

/// Canonical JSON bytes: sorted keys (nlohmann's std::map ordering),
/// two-space indent, trailing newline.
inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

// ============================================================
// Content hash rendering (the hash itself lives in core.hpp)
// ============================================================

inline std::string hex_u64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[std::size_t(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// ============================================================
// Whole-file text IO (binary mode so bytes are exact)
// ============================================================

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  PYM_REQUIRE(os.good(), "write_text_file: cannot open " + path);
  os.write(text.data(), std::streamsize(text.size()));
  PYM_REQUIRE(os.good(), "write_text_file: short write to " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  PYM_REQUIRE(is.good(), "read_text_file: cannot open " + path);
  std::string out((std::istreambuf_iterator<char>(is)),
                  std::istreambuf_iterator<char>());
  return out;
}

// ============================================================
// Domain descriptors
// ============================================================

/// JSON descriptor carrying exactly the factory arguments plus the derived
/// box extents as a cross-check.
inline Json domain_descriptor(const Domain& d) {
  Json j;
  switch (d.kind) {
    case DomainKind::Torus:
      j["kind"] = "torus";
      j["period"] = d.L;
      j["n"] = d.n[0];
      break;
    case DomainKind::Ball:
      j["kind"] = "ball";
      j["outer"] = d.R;
      j["spacing"] = d.h;
      break;
    case DomainKind::Annulus:
      j["kind"] = "annulus";
      j["inner"] = d.rin;
      j["outer"] = d.R;
      j["spacing"] = d.h;
      break;
  }
  j["box"] = {d.n[0], d.n[1], d.n[2], d.n[3]};
  return j;
}

/// Rebuild a domain through its factory (so all derived quantities and
/// invariants are re-established) and verify the recorded box agrees.
inline std::unique_ptr<Domain> domain_from_descriptor(const Json& j) {
  PYM_REQUIRE(j.is_object() && j.contains("kind"),
              "domain descriptor: missing kind");
  const std::string kind = j.at("kind").get<std::string>();
  std::unique_ptr<Domain> d;
  if (kind == "torus") {
    d = std::make_unique<Domain>(
        Domain::torus(j.at("period").get<double>(), j.at("n").get<int>()));
  } else if (kind == "ball") {
    d = std::make_unique<Domain>(
        Domain::ball(j.at("outer").get<double>(), j.at("spacing").get<double>()));
  } else if (kind == "annulus") {
    d = std::make_unique<Domain>(Domain::annulus(j.at("inner").get<double>(),
                                                 j.at("outer").get<double>(),
                                                 j.at("spacing").get<double>()));
  } else {
    throw precondition_error("domain descriptor: unknown kind '" + kind + "'");
  }
  if (j.contains("box")) {
    const auto box = j.at("box");
    PYM_REQUIRE(box.is_array() && box.size() == 4,
                "domain descriptor: box must have four extents");
    for (int a = 0; a < 4; ++a)
      PYM_REQUIRE(box[std::size_t(a)].get<int>() == d->n[a],
                  "domain descriptor: recorded box disagrees with the factory");
  }
  return d;
}

// ============================================================
// Field snapshots
// ============================================================
// Layout (stable):
//   line 1: "PYMF1"
//   line 2: JSON header {"cols","degree","domain","format":"f64le","values"}
//   then  : values * 8 bytes, little-endian IEEE-754 doubles in storage order
// The byte order is spelled out explicitly so the format does not depend on
// the host endianness.

namespace detail {

inline void append_f64le(std::string& out, double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, 8);
  for (int b = 0; b < 8; ++b) out.push_back(char((u >> (8 * b)) & 0xff));
}

inline double parse_f64le(const unsigned char* p) {
  std::uint64_t u = 0;
  for (int b = 0; b < 8; ++b) u |= std::uint64_t(p[b]) << (8 * b);
  double x;
  std::memcpy(&x, &u, 8);
  return x;
}

}  // namespace detail

/// A deserialized field together with the domain it lives on.  The form holds
/// a pointer into `dom`, which is heap-allocated so moves keep it valid.
struct Snapshot {
  std::unique_ptr<Domain> dom;
  LatticeForm form;
};

inline std::string snapshot_bytes(const LatticeForm& f) {
  PYM_REQUIRE(f.dom != nullptr, "snapshot: field has no domain");
  Json header;
  header["cols"] = f.cols;
  header["degree"] = f.degree;
  header["domain"] = domain_descriptor(*f.dom);
  header["format"] = "f64le";
  header["values"] = f.data.size();
  std::string out = "PYMF1\n" + header.dump() + "\n";
  out.reserve(out.size() + 8 * f.data.size());
  for (const double v : f.data) detail::append_f64le(out, v);
  return out;
}

inline void write_snapshot(const LatticeForm& f, const std::string& path) {
  write_text_file(path, snapshot_bytes(f));
}

inline Snapshot snapshot_from_bytes(const std::string& bytes) {
  const std::size_t magic_end = bytes.find('\n');
  PYM_REQUIRE(magic_end != std::string::npos && bytes.substr(0, magic_end) == "PYMF1",
              "snapshot: bad magic");
  const std::size_t header_end = bytes.find('\n', magic_end + 1);
  PYM_REQUIRE(header_end != std::string::npos, "snapshot: truncated header");
  Json header;
  try {
    header = Json::parse(bytes.substr(magic_end + 1, header_end - magic_end - 1));
  } catch (const Json::parse_error& e) {
    throw precondition_error(std::string("snapshot: unparsable header: ") + e.what());
  }
  PYM_REQUIRE(header.value("format", "") == "f64le",
              "snapshot: unsupported payload format");

  Snapshot out;
  out.dom = domain_from_descriptor(header.at("domain"));
  const int degree = header.at("degree").get<int>();
  const int cols = header.at("cols").get<int>();
  PYM_REQUIRE(degree >= 0 && degree <= 4 && cols >= 1, "snapshot: bad shape");
  out.form = LatticeForm(*out.dom, degree, cols);

  const std::size_t values = header.at("values").get<std::size_t>();
  PYM_REQUIRE(values == out.form.data.size(),
              "snapshot: value count disagrees with the domain shape");
  PYM_REQUIRE(bytes.size() == header_end + 1 + 8 * values,
              "snapshot: payload size mismatch");
  const unsigned char* p =
      reinterpret_cast<const unsigned char*>(bytes.data()) + header_end + 1;
  for (std::size_t i = 0; i < values; ++i)
    out.form.data[i] = detail::parse_f64le(p + 8 * i);
  return out;
}

inline Snapshot read_snapshot(const std::string& path) {
  return snapshot_from_bytes(read_text_file(path));
}

}  // namespace pym
