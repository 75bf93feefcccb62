#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/errors.hpp"

namespace qem {

// Minimal OpenQASM 2 reader covering exactly the circuit class this project
// produces: one quantum register, the gates {ecr, sx, x, id, rz, rx, rzz},
// and `measure`. Angle expressions accept decimal literals, `pi`, `pi/k`,
// and `k*pi/m`, each with an optional leading minus.

namespace detail {

struct Token {
  enum Type { Ident, Number, String, Symbol, End } type = End;
  std::string text;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) return t;  // End
    char ch = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      t.type = Token::Ident;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        t.text += take();
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      t.type = Token::Number;
      while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E' ||
                                    ((src_[pos_] == '+' || src_[pos_] == '-') && !t.text.empty() &&
                                     (t.text.back() == 'e' || t.text.back() == 'E'))))
        t.text += take();
      return t;
    }
    if (ch == '"') {
      t.type = Token::String;
      take();
      while (pos_ < src_.size() && src_[pos_] != '"') t.text += take();
      if (pos_ >= src_.size()) throw ParseError("unterminated string", t.line, t.col);
      take();
      return t;
    }
    t.type = Token::Symbol;
    t.text += take();
    if (t.text == "-" && pos_ < src_.size() && src_[pos_] == '>') t.text += take();
    return t;
  }

 private:
  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else {
        break;
      }
    }
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

}  // namespace detail

class QasmParser {
 public:
  explicit QasmParser(const std::string& src) : lex_(src) { advance(); }

  Circuit parse() {
    Circuit c;
    bool saw_qreg = false;
    while (cur_.type != detail::Token::End) {
      if (cur_.type != detail::Token::Ident) fail("expected statement");
      std::string head = cur_.text;
      if (head == "OPENQASM") {
        advance();
        expect_number("version");
        expect_symbol(";");
      } else if (head == "include") {
        advance();
        if (cur_.type != detail::Token::String) fail("expected include path string");
        advance();
        expect_symbol(";");
      } else if (head == "qreg") {
        if (saw_qreg) fail("only one quantum register is supported");
        advance();
        qreg_name_ = expect_ident("register name");
        expect_symbol("[");
        c.n_qubits = static_cast<int>(expect_integer("register size"));
        expect_symbol("]");
        expect_symbol(";");
        if (c.n_qubits <= 0) fail("register size must be positive");
        saw_qreg = true;
      } else if (head == "creg") {
        advance();
        expect_ident("register name");
        expect_symbol("[");
        expect_integer("register size");
        expect_symbol("]");
        expect_symbol(";");
      } else if (head == "measure") {
        if (!saw_qreg) fail("measure before qreg declaration");
        detail::Token at = cur_;
        advance();
        int q = parse_qubit_ref(c.n_qubits);
        if (cur_.type == detail::Token::Symbol && cur_.text == "->") {
          advance();
          expect_ident("classical register");
          expect_symbol("[");
          expect_integer("classical index");
          expect_symbol("]");
        }
        expect_symbol(";");
        for (const auto& m : c.measured)
          if (m.qubit == q)
            throw ParseError("qubit " + std::to_string(q) + " measured twice", at.line, at.col);
        c.measured.push_back({q, Basis::Z});
      } else {
        GateKind kind;
        detail::Token at = cur_;
        if (!kind_from_name(head, kind))
          throw ParseError("unknown gate '" + head + "'", at.line, at.col);
        if (!saw_qreg) fail("gate before qreg declaration");
        advance();
        double angle = 0.0;
        if (has_angle(kind)) {
          expect_symbol("(");
          angle = parse_angle();
          expect_symbol(")");
        }
        std::vector<int> qubits;
        qubits.push_back(parse_qubit_ref(c.n_qubits));
        while (cur_.type == detail::Token::Symbol && cur_.text == ",") {
          advance();
          qubits.push_back(parse_qubit_ref(c.n_qubits));
        }
        expect_symbol(";");
        if (static_cast<int>(qubits.size()) != arity(kind))
          throw ParseError(std::string("gate ") + kind_name(kind) + " expects " +
                               std::to_string(arity(kind)) + " qubit(s)",
                           at.line, at.col);
        if (arity(kind) == 2 && qubits[0] == qubits[1])
          throw ParseError("gate qubits must be distinct", at.line, at.col);
        int id = static_cast<int>(c.gates.size());
        c.gates.push_back({id, kind, std::move(qubits),
                           has_angle(kind) ? normalize_angle(angle) : 0.0, id});
      }
    }
    if (!saw_qreg) throw ParseError("missing qreg declaration", 1, 1);
    c.stage = Stage::native;
    for (const auto& g : c.gates)
      if (!is_native_kind(g.kind)) c.stage = Stage::logical;
    validate_circuit(c);
    return c;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, cur_.line, cur_.col); }

  void expect_symbol(const std::string& s) {
    if (cur_.type != detail::Token::Symbol || cur_.text != s) fail("expected '" + s + "'");
    advance();
  }

  std::string expect_ident(const std::string& what) {
    if (cur_.type != detail::Token::Ident) fail("expected " + what);
    std::string s = cur_.text;
    advance();
    return s;
  }

  double expect_number(const std::string& what) {
    if (cur_.type != detail::Token::Number) fail("expected " + what);
    char* end = nullptr;
    double v = std::strtod(cur_.text.c_str(), &end);
    if (end == nullptr || *end != '\0') fail("malformed number");
    advance();
    return v;
  }

  long expect_integer(const std::string& what) {
    double v = expect_number(what);
    long i = static_cast<long>(v);
    if (static_cast<double>(i) != v) fail(what + " must be an integer");
    return i;
  }

  int parse_qubit_ref(int n_qubits) {
    detail::Token at = cur_;
    std::string reg = expect_ident("qubit reference");
    if (reg != qreg_name_)
      throw ParseError("unknown register '" + reg + "'", at.line, at.col);
    expect_symbol("[");
    long idx = expect_integer("qubit index");
    expect_symbol("]");
    if (idx < 0 || idx >= n_qubits)
      throw ParseError("qubit index out of range: " + std::to_string(idx), at.line, at.col);
    return static_cast<int>(idx);
  }

  // angle := ['-'] (pi ['/' num] | num ['*' pi ['/' num]])
  double parse_angle() {
    detail::Token at = cur_;
    double sign = 1.0;
    if (cur_.type == detail::Token::Symbol && cur_.text == "-") {
      sign = -1.0;
      advance();
    }
    double value;
    if (cur_.type == detail::Token::Ident && cur_.text == "pi") {
      advance();
      value = kPi;
      if (cur_.type == detail::Token::Symbol && cur_.text == "/")
        value = divide_by_number(value);
    } else if (cur_.type == detail::Token::Number) {
      value = expect_number("angle");
      if (cur_.type == detail::Token::Symbol && cur_.text == "*") {
        advance();
        if (!(cur_.type == detail::Token::Ident && cur_.text == "pi"))
          throw ParseError("malformed angle expression", at.line, at.col);
        advance();
        value *= kPi;
        if (cur_.type == detail::Token::Symbol && cur_.text == "/")
          value = divide_by_number(value);
      }
    } else {
      throw ParseError("malformed angle expression", at.line, at.col);
    }
    return sign * value;
  }

  double divide_by_number(double value) {
    advance();  // consume '/'
    double d = expect_number("angle divisor");
    if (d == 0.0) fail("division by zero in angle");
    return value / d;
  }

  detail::Lexer lex_;
  detail::Token cur_;
  std::string qreg_name_;
};

inline Circuit parse_circuit(const std::string& text) { return QasmParser(text).parse(); }

// Serializer back to the same subset. Only Z-basis measurements exist in
// this surface; X/Y-basis circuits round-trip through the JSON form instead.
inline std::string to_qasm(const Circuit& c) {
  validate_circuit(c);
  std::string out = "OPENQASM 2.0;\n";
  out += "qreg q[" + std::to_string(c.n_qubits) + "];\n";
  char buf[64];
  for (const auto& g : c.gates) {
    out += kind_name(g.kind);
    if (has_angle(g.kind)) {
      std::snprintf(buf, sizeof(buf), "(%.17g)", g.angle);
      out += buf;
    }
    out += " q[" + std::to_string(g.qubits[0]) + "]";
    if (g.qubits.size() == 2) out += ", q[" + std::to_string(g.qubits[1]) + "]";
    out += ";\n";
  }
  for (const auto& m : c.measured) {
    if (m.basis != Basis::Z)
      throw std::invalid_argument("only Z-basis measurements have an OpenQASM form");
    out += "measure q[" + std::to_string(m.qubit) + "];\n";
  }
  return out;
}

}  // namespace qem
