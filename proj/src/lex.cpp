#include "lex.hpp"

#include <cctype>
#include <map>

namespace kepal::lex {

namespace {

const std::map<std::string_view, Tok> kKeywords = {
    {"props", Tok::KwProps}, {"const", Tok::KwConst}, {"pool", Tok::KwPool},
    {"init", Tok::KwInit},   {"agent", Tok::KwAgent}, {"observes", Tok::KwObserves},
    {"all", Tok::KwAll},     {"none", Tok::KwNone},   {"sum", Tok::KwSum},
    {"where", Tok::KwWhere}, {"in", Tok::KwIn},       {"notin", Tok::KwNotin},
    {"mod", Tok::KwMod},     {"true", Tok::KwTrue},   {"set", Tok::KwSet},
    {"K", Tok::KwK},
};

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;

  auto push = [&](Tok k, std::string t, int l, int c, std::int64_t num = 0) {
    out.push_back(Token{k, std::move(t), num, l, c});
  };

  while (i < text.size()) {
    char ch = text[i];
    int l = line, c = col;
    auto advance = [&](std::size_t n) {
      for (std::size_t k = 0; k < n; ++k) {
        if (text[i + k] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      i += n;
    };

    if (ch == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      std::string t(text.substr(i, j - i));
      push(Tok::Number, t, l, c, std::stoll(t));
      advance(j - i);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                                 text[j] == '_'))
        ++j;
      std::string t(text.substr(i, j - i));
      auto kw = kKeywords.find(t);
      push(kw == kKeywords.end() ? Tok::Ident : kw->second, t, l, c);
      advance(j - i);
      continue;
    }
    if (ch == '_') {
      // A lone underscore is the wildcard binder.
      if (i + 1 < text.size() && (std::isalnum(static_cast<unsigned char>(text[i + 1])) ||
                                  text[i + 1] == '_'))
        throw SpecError("identifiers must start with a letter", l, c);
      push(Tok::Underscore, "_", l, c);
      advance(1);
      continue;
    }

    auto two = text.substr(i, 2);
    if (two == ":=") { push(Tok::Assign, ":=", l, c); advance(2); continue; }
    if (two == "..") { push(Tok::DotDot, "..", l, c); advance(2); continue; }
    if (two == "->") { push(Tok::Arrow, "->", l, c); advance(2); continue; }
    if (two == "!=") { push(Tok::Neq, "!=", l, c); advance(2); continue; }

    Tok k;
    switch (ch) {
      case ':': k = Tok::Colon; break;
      case '.': k = Tok::Dot; break;
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '[': k = Tok::LBracket; break;
      case ']': k = Tok::RBracket; break;
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case ',': k = Tok::Comma; break;
      case '!': k = Tok::Bang; break;
      case '?': k = Tok::Question; break;
      case '&': k = Tok::Amp; break;
      case '|': k = Tok::Pipe; break;
      case '<': k = Tok::Lt; break;
      case '>': k = Tok::Gt; break;
      case '=': k = Tok::Eq; break;
      default:
        throw SpecError(std::string("unexpected character '") + ch + "'", l, c);
    }
    push(k, std::string(1, ch), l, c);
    advance(1);
  }
  out.push_back(Token{Tok::Eof, "", 0, line, col});
  return out;
}

}  // namespace kepal::lex
