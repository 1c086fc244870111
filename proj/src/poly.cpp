#include "roofbench/poly.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

namespace roofbench {

Poly determinant(const std::vector<std::vector<Poly>>& m) {
  const std::size_t n = m.size();
  if (n == 0) throw ArgumentError("determinant: empty matrix");
  for (const auto& row : m)
    if (row.size() != n) throw ArgumentError("determinant: matrix is not square");
  const int nv = m[0][0].nvars();
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Poly det(nv);
  for (std::size_t j = 0; j < n; ++j) {
    if (m[0][j].is_zero()) continue;
    std::vector<std::vector<Poly>> minor;
    minor.reserve(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::vector<Poly> row;
      row.reserve(n - 1);
      for (std::size_t k = 0; k < n; ++k)
        if (k != j) row.push_back(m[i][k]);
      minor.push_back(std::move(row));
    }
    Poly cof = m[0][j] * determinant(minor);
    if (j % 2 == 0)
      det += cof;
    else
      det -= cof;
  }
  return det;
}

namespace {

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  void expect(char c) {
    if (peek() != c)
      fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  double number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ == start || (pos_ == start + 1 && s_[start] == '.')) {
      pos_ = start;
      fail("expected a numeric coefficient");
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      std::size_t digits = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == digits) pos_ = save;
    }
    return std::stod(s_.substr(start, pos_ - start));
  }

  int integer() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == start) fail("expected an integer exponent");
    return std::stoi(s_.substr(start, pos_ - start));
  }

  // Variable name xK, returned 0-based.
  int variable(int nvars) {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ >= s_.size() || s_[pos_] != 'x') fail("expected a variable x1..x" + std::to_string(nvars));
    ++pos_;
    std::size_t digits = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == digits) {
      pos_ = start;
      fail("expected a variable index after 'x'");
    }
    int k = std::stoi(s_.substr(digits, pos_ - digits));
    if (k < 1 || k > nvars) {
      pos_ = start;
      fail("variable index out of range 1.." + std::to_string(nvars));
    }
    return k - 1;
  }

  [[noreturn]] void fail(const std::string& msg) {
    skip_ws();
    std::size_t end = pos_;
    auto stop = [&](char c) { return c == '+' || c == '-' || c == '*' || c == '^'; };
    while (end < s_.size() && !std::isspace(static_cast<unsigned char>(s_[end])) && (end == pos_ || !stop(s_[end])))
      ++end;
    std::string tok = pos_ < s_.size() ? s_.substr(pos_, std::max<std::size_t>(1, end - pos_)) : "<end>";
    throw ParseError("polynomial parse error at position " + std::to_string(pos_) + " near '" + tok +
                         "': " + msg,
                     tok);
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Poly parse_polynomial(const std::string& text, int nvars) {
  if (nvars < 1) throw ArgumentError("parse_polynomial: nvars must be positive");
  Lexer lex(text);
  Poly p(nvars);
  if (lex.done()) lex.fail("empty polynomial");
  bool first = true;
  while (!lex.done()) {
    double sign = 1.0;
    char c = lex.peek();
    if (c == '+' || c == '-') {
      lex.expect(c);
      sign = c == '-' ? -1.0 : 1.0;
    } else if (!first) {
      lex.fail("expected '+' or '-' between terms");
    }
    first = false;
    double coef = sign * lex.number();
    Exponents e(nvars, 0);
    while (lex.peek() == '*') {
      lex.expect('*');
      int v = lex.variable(nvars);
      lex.expect('^');
      e[v] += lex.integer();
    }
    p.add_term(e, coef);
  }
  return p;
}

std::string to_string(const Poly& p) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  char buf[64];
  for (const auto& [e, c] : p.terms()) {
    std::snprintf(buf, sizeof buf, "%.17g", std::abs(c));
    if (c < 0)
      os << (first ? "-" : " - ");
    else if (!first)
      os << " + ";
    os << buf;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] > 0) os << "*x" << (i + 1) << '^' << e[i];
    first = false;
  }
  return os.str();
}

}  // namespace roofbench
