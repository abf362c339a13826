#include "charparse/treebank/conllu.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "charparse/util/error.hpp"

namespace charparse::treebank {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_int(std::string_view s, int& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

// Plain integer IDs are word tokens; ranges (1-2) and decimals (1.1) are
// multiword tokens and empty nodes, which carry no tree structure.
bool is_word_id(std::string_view id, int& out) {
  if (id.find('-') != std::string_view::npos) return false;
  if (id.find('.') != std::string_view::npos) return false;
  return parse_int(id, out);
}

void parse_feats(std::string_view col, Token& tok) {
  if (col == "_" || col.empty()) return;
  for (std::string_view pair : split(col, '|')) {
    size_t eq = pair.find('=');
    if (eq == std::string_view::npos || eq == 0) continue;
    tok.feats.emplace_back(std::string(pair.substr(0, eq)),
                           std::string(pair.substr(eq + 1)));
  }
}

void flush_sentence(std::vector<Token>& tokens, std::vector<Sentence>& out,
                    LoadStats& stats, bool require_gold, bool malformed) {
  if (tokens.empty()) {
    if (malformed) ++stats.rejected;  // block whose every row was bad
    return;
  }
  Sentence s;
  s.tokens = std::move(tokens);
  tokens.clear();
  if (malformed || (require_gold && !is_tree(s))) {
    ++stats.rejected;
    return;
  }
  ++stats.kept;
  out.push_back(std::move(s));
}

}  // namespace

bool is_tree(const Sentence& s) {
  int n = s.size();
  if (n == 0) return false;
  for (int i = 0; i < n; ++i) {
    int h = s.tokens[static_cast<size_t>(i)].head;
    if (h < 0 || h > n || h == i + 1) return false;
  }
  // Each token must reach the root; any cycle makes some chain exceed n hops.
  for (int i = 0; i < n; ++i) {
    int cur = i + 1, hops = 0;
    while (cur != 0) {
      cur = s.tokens[static_cast<size_t>(cur - 1)].head;
      if (++hops > n) return false;
    }
  }
  return true;
}

std::vector<Sentence> parse_conllu(std::string_view text, LoadStats* stats,
                                   bool require_gold) {
  LoadStats local;
  LoadStats& st = stats ? *stats : local;
  std::vector<Sentence> out;
  std::vector<Token> tokens;
  bool malformed = false;
  int expected_id = 1;

  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      flush_sentence(tokens, out, st, require_gold, malformed);
      malformed = false;
      expected_id = 1;
      continue;
    }
    if (line[0] == '#') continue;

    std::vector<std::string_view> cols = split(line, '\t');
    if (cols.size() != 10) {
      malformed = true;
      continue;
    }
    int id = 0;
    if (!is_word_id(cols[0], id)) continue;
    if (id != expected_id) malformed = true;
    ++expected_id;

    Token tok;
    tok.form = std::string(cols[1]);
    tok.upos = std::string(cols[3]);
    parse_feats(cols[5], tok);
    if (cols[6] == "_") {
      tok.head = -1;
      if (require_gold) malformed = true;
    } else if (!parse_int(cols[6], tok.head)) {
      malformed = true;
    }
    tok.deprel = std::string(cols[7]);
    if (tok.form.empty()) malformed = true;
    tokens.push_back(std::move(tok));
  }
  flush_sentence(tokens, out, st, require_gold, malformed);
  return out;
}

std::vector<Sentence> load_conllu(const std::string& path, LoadStats* stats,
                                  bool require_gold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_conllu(buf.str(), stats, require_gold);
}

void write_conllu(std::ostream& out, const std::vector<Sentence>& sentences) {
  for (const Sentence& s : sentences) {
    for (int i = 0; i < s.size(); ++i) {
      const Token& t = s.tokens[static_cast<size_t>(i)];
      out << (i + 1) << '\t' << t.form << "\t_\t"
          << (t.upos.empty() ? "_" : t.upos) << "\t_\t";
      if (t.feats.empty()) {
        out << '_';
      } else {
        for (size_t f = 0; f < t.feats.size(); ++f) {
          if (f) out << '|';
          out << t.feats[f].first << '=' << t.feats[f].second;
        }
      }
      out << '\t';
      if (t.head < 0)
        out << '_';
      else
        out << t.head;
      out << '\t' << (t.deprel.empty() ? "_" : t.deprel) << "\t_\t_\n";
    }
    out << '\n';
  }
}

std::string format_conllu(const std::vector<Sentence>& sentences) {
  std::ostringstream out;
  write_conllu(out, sentences);
  return out.str();
}

}  // namespace charparse::treebank
