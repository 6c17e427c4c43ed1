#pragma once

#include <string>
#include <vector>

#include <conicert/expr.hpp>

// Shared lexer and expression parser used by both the standalone expression
// entry point and the problem-file reader.
namespace conicert::detail {

enum class TokKind { Number, Ident, Punct, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  double num = 0;
  int line = 1;
  int col = 1;
};

// Tokenizes the whole input; `#` comments run to end of line. Always appends
// a trailing End token. Throws ParseError on unknown characters.
std::vector<Token> lex(const std::string& text);

struct TokenStream {
  std::vector<Token> toks;
  size_t pos = 0;

  const Token& peek() const { return toks[pos]; }
  const Token& get() {
    const Token& t = toks[pos];
    if (pos + 1 < toks.size()) ++pos;
    return t;
  }
  bool at_punct(char c) const {
    return peek().kind == TokKind::Punct && peek().text.size() == 1 && peek().text[0] == c;
  }
  bool at_ident(const std::string& s) const {
    return peek().kind == TokKind::Ident && peek().text == s;
  }
  bool at_end() const { return peek().kind == TokKind::End; }
};

[[noreturn]] void fail_at(const Token& tok, const std::string& msg);

// Section keywords of the problem file format, reserved inside expressions.
bool is_keyword(const std::string& s);

// Parses one expression from the stream into ast's pool; returns the root
// node index. Stops at the first token that cannot extend the expression.
int parse_expression_into(ExpressionAst& ast, TokenStream& ts);

}  // namespace conicert::detail
