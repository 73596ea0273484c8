#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kepal/util.hpp"

namespace kepal::lex {

enum class Tok : std::uint8_t {
  Ident, Number, KwProps, KwConst, KwPool, KwInit, KwAgent, KwObserves,
  KwAll, KwNone, KwSum, KwWhere, KwIn, KwNotin, KwMod, KwTrue, KwSet, KwK,
  Assign,      // :=
  Colon, Dot, DotDot, Plus, Minus, Star, LParen, RParen, LBracket, RBracket,
  LBrace, RBrace, Comma, Bang, Question, Amp, Pipe, Arrow, Lt, Gt, Eq, Neq,
  Underscore, Eof,
};

struct Token {
  Tok kind;
  std::string text;
  std::int64_t number = 0;
  int line = 1, col = 1;
};

inline const char* tok_name(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::Assign: return "':='";
    case Tok::Colon: return "':'";
    case Tok::Dot: return "'.'";
    case Tok::DotDot: return "'..'";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Bang: return "'!'";
    case Tok::Question: return "'?'";
    case Tok::Amp: return "'&'";
    case Tok::Pipe: return "'|'";
    case Tok::Arrow: return "'->'";
    case Tok::Lt: return "'<'";
    case Tok::Gt: return "'>'";
    case Tok::Eq: return "'='";
    case Tok::Neq: return "'!='";
    case Tok::Underscore: return "'_'";
    case Tok::Eof: return "end of input";
    default: return "keyword";
  }
}

std::vector<Token> tokenize(std::string_view text);

/// Shared cursor over a token stream with positioned diagnostics.
class Cursor {
public:
  explicit Cursor(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token& get() {
    const Token& t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    else pos_ = toks_.size() - 1;
    return t;
  }
  bool at(Tok k) const { return peek().kind == k; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    get();
    return true;
  }
  const Token& expect(Tok k, const char* what = nullptr) {
    if (!at(k))
      fail(std::string("expected ") + (what ? what : tok_name(k)) + ", found " +
           describe(peek()));
    return get();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw SpecError(msg, peek().line, peek().col);
  }
  static std::string describe(const Token& t) {
    if (t.kind == Tok::Eof) return "end of input";
    return "'" + t.text + "'";
  }

  std::size_t save() const { return pos_; }
  void restore(std::size_t p) { pos_ = p; }

private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace kepal::lex
