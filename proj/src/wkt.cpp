#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "fragseg/errors.hpp"
#include "fragseg/geometry.hpp"

namespace fragseg {

namespace {

void append_number(std::string& out, double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    out += std::to_string(static_cast<long long>(v));
    return;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void append_ring(std::string& out, const Ring& r) {
  out += '(';
  for (std::size_t i = 0; i <= r.size(); ++i) {
    const Point& p = r[i % r.size()];
    if (i) out += ", ";
    append_number(out, p.x());
    out += ' ';
    append_number(out, p.y());
  }
  out += ')';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  std::vector<PolygonWithHoles> parse() {
    std::vector<PolygonWithHoles> out;
    const std::string word = keyword();
    if (word == "POLYGON") {
      if (!try_empty()) out.push_back(polygon());
    } else if (word == "MULTIPOLYGON") {
      if (!try_empty()) {
        expect('(');
        do out.push_back(polygon());
        while (accept(','));
        expect(')');
      }
    } else {
      fail(word.empty() ? "expected geometry keyword" : "unsupported geometry type '" + word + "'", start_);
    }
    skip_ws();
    if (i_ != s_.size()) fail("unexpected trailing characters", i_);
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t at) { throw WktParseError(msg, at); }

  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  std::string keyword() {
    skip_ws();
    start_ = i_;
    std::string w;
    while (i_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[i_])))
      w += static_cast<char>(std::toupper(static_cast<unsigned char>(s_[i_++])));
    return w;
  }

  bool try_empty() {
    const std::size_t save = i_;
    if (keyword() == "EMPTY") return true;
    i_ = save;
    return false;
  }

  bool accept(char c) {
    skip_ws();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'", i_);
  }

  double number() {
    skip_ws();
    const char* first = s_.data() + i_;
    const char* last = s_.data() + s_.size();
    if (first != last && *first == '+') ++first;
    double v = 0;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || !std::isfinite(v)) fail("expected number", i_);
    i_ = static_cast<std::size_t>(res.ptr - s_.data());
    return v;
  }

  Ring ring() {
    expect('(');
    const std::size_t at = i_;
    Ring r;
    do {
      const double x = number();
      const double y = number();
      r.emplace_back(x, y);
    } while (accept(','));
    expect(')');
    if (r.size() < 4) fail("ring needs at least four points", at);
    if (r.front() != r.back()) fail("ring is not closed", at);
    r.pop_back();
    return r;
  }

  PolygonWithHoles polygon() {
    PolygonWithHoles p;
    expect('(');
    p.shell = ring();
    while (accept(',')) p.holes.push_back(ring());
    expect(')');
    return p;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::size_t start_ = 0;
};

}  // namespace

std::string to_wkt(const PolygonWithHoles& p) {
  if (p.shell.empty()) return "POLYGON EMPTY";
  std::string out = "POLYGON (";
  append_ring(out, p.shell);
  for (const auto& h : p.holes) {
    out += ", ";
    append_ring(out, h);
  }
  out += ')';
  return out;
}

std::vector<PolygonWithHoles> from_wkt(std::string_view text) { return Parser(text).parse(); }

PolygonWithHoles polygon_from_wkt(std::string_view text) {
  auto polys = from_wkt(text);
  if (polys.size() != 1)
    throw WktParseError("expected exactly one polygon, found " + std::to_string(polys.size()), 0);
  return std::move(polys.front());
}

}  // namespace fragseg
