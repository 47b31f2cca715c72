#include "perturbkit/conllu.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "perturbkit/error.hpp"
#include "perturbkit/text.hpp"

namespace perturbkit {

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string label(const DepSentence& s) {
  return s.sent_id.empty() ? std::string("<no sent_id>") : s.sent_id;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// "# key = value" -> value when the key matches.
bool comment_value(std::string_view line, std::string_view key, std::string& value) {
  std::string_view body = trim(line.substr(1));
  if (!starts_with(body, key)) return false;
  body = trim(body.substr(key.size()));
  if (body.empty() || body.front() != '=') return false;
  value = std::string(trim(body.substr(1)));
  return true;
}

std::vector<std::vector<int>> children_of(const DepSentence& s) {
  std::vector<std::vector<int>> children(static_cast<std::size_t>(s.size()) + 1);
  for (const auto& t : s.tokens) children[static_cast<std::size_t>(t.head)].push_back(t.id);
  return children;
}

} // namespace

std::vector<int> DepSentence::heads() const {
  std::vector<int> h;
  h.reserve(tokens.size());
  for (const auto& t : tokens) h.push_back(t.head);
  return h;
}

std::vector<std::string> DepSentence::forms() const {
  std::vector<std::string> f;
  f.reserve(tokens.size());
  for (const auto& t : tokens) f.push_back(t.form);
  return f;
}

int DepSentence::root() const {
  for (const auto& t : tokens)
    if (t.head == 0) return t.id;
  return 0;
}

bool is_tree(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    int h = heads[static_cast<std::size_t>(i)];
    if (h < 0 || h > n || h == i + 1) return false;
    if (h == 0) ++roots;
  }
  if (roots != 1) return false;
  // Walk up from every node; a path longer than n means a cycle.
  for (int i = 1; i <= n; ++i) {
    int cur = i;
    for (int steps = 0; cur != 0; ++steps) {
      if (steps > n) return false;
      cur = heads[static_cast<std::size_t>(cur - 1)];
    }
  }
  return true;
}

void validate(const DepSentence& s) {
  const int n = s.size();
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Token& t = s.tokens[static_cast<std::size_t>(i)];
    if (t.id != i + 1)
      throw ValidationError("sentence " + label(s) + ": token ids are not contiguous 1..n");
    if (t.head < 0 || t.head > n)
      throw ValidationError("sentence " + label(s) + ": head of token " + std::to_string(t.id) +
                            " out of range");
    if (t.head == t.id)
      throw ValidationError("sentence " + label(s) + ": token " + std::to_string(t.id) +
                            " is its own head");
    if (t.head == 0) ++roots;
  }
  if (n > 0 && roots != 1)
    throw ValidationError("sentence " + label(s) + ": expected exactly one root, found " +
                          std::to_string(roots));
  if (n > 0 && !is_tree(s.heads()))
    throw ValidationError("sentence " + label(s) + ": head relation contains a cycle");
}

std::vector<DepSentence> parse_conllu(std::istream& input) {
  std::vector<DepSentence> out;
  DepSentence current;
  bool open = false;
  std::size_t first_line = 0;
  std::size_t lineno = 0;
  std::string line;

  auto flush = [&] {
    if (!open) return;
    if (!current.tokens.empty()) {
      try {
        validate(current);
      } catch (const ValidationError& e) {
        throw ValidationError(std::string(e.what()) + " (block starting at line " +
                              std::to_string(first_line) + ")");
      }
      out.push_back(std::move(current));
    }
    current = DepSentence{};
    open = false;
  };

  while (std::getline(input, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (!open) {
      open = true;
      first_line = lineno;
    }
    if (line.front() == '#') {
      std::string value;
      if (comment_value(line, "sent_id", value)) current.sent_id = value;
      else if (comment_value(line, "text", value)) current.text = value;
      current.comments.push_back(line);
      continue;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 10)
      throw ParseError("expected 10 tab-separated columns, found " + std::to_string(cols.size()),
                       lineno);
    const std::string& id = cols[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) continue;
    Token t;
    if (!parse_int(id, t.id)) throw ParseError("invalid token id '" + id + "'", lineno);
    if (!parse_int(cols[6], t.head)) throw ParseError("invalid head '" + cols[6] + "'", lineno);
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = cols[5];
    t.deprel = cols[7];
    t.deps = cols[8];
    t.misc = cols[9];
    if (t.id != current.size() + 1)
      throw ParseError("token id " + id + " out of sequence", lineno);
    current.tokens.push_back(std::move(t));
  }
  flush();
  return out;
}

std::vector<DepSentence> parse_conllu_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_conllu(in);
}

std::vector<DepSentence> read_conllu_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open treebank '" + path + "'");
  return parse_conllu(in);
}

std::string serialize_conllu(const DepSentence& s) {
  validate(s);
  std::ostringstream out;
  bool has_id = false;
  bool has_text = false;
  for (const auto& c : s.comments) {
    std::string v;
    has_id = has_id || comment_value(c, "sent_id", v);
    has_text = has_text || comment_value(c, "text", v);
  }
  if (!has_id && !s.sent_id.empty()) out << "# sent_id = " << s.sent_id << '\n';
  if (!has_text && !s.text.empty()) out << "# text = " << s.text << '\n';
  for (const auto& c : s.comments) out << c << '\n';
  for (const auto& t : s.tokens) {
    out << t.id << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos << '\t'
        << t.feats << '\t' << t.head << '\t' << t.deprel << '\t' << t.deps << '\t' << t.misc
        << '\n';
  }
  out << '\n';
  return out.str();
}

std::string serialize_conllu(const std::vector<DepSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) out += serialize_conllu(s);
  return out;
}

std::vector<int> subtree_nodes(const DepSentence& s, int node) {
  if (node < 1 || node > s.size())
    throw ValidationError("node " + std::to_string(node) + " out of range 1.." +
                          std::to_string(s.size()));
  auto children = children_of(s);
  std::vector<char> seen(static_cast<std::size_t>(s.size()) + 1, 0);
  std::vector<int> stack{node};
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    seen[static_cast<std::size_t>(cur)] = 1;
    for (int c : children[static_cast<std::size_t>(cur)]) stack.push_back(c);
  }
  std::vector<int> nodes;
  for (int i = 1; i <= s.size(); ++i)
    if (seen[static_cast<std::size_t>(i)]) nodes.push_back(i);
  return nodes;
}

SubtreeSpan subtree_span(const DepSentence& s, int node) {
  auto nodes = subtree_nodes(s, node);
  SubtreeSpan span{nodes.front(), nodes.back(), true};
  span.contiguous = static_cast<int>(nodes.size()) == span.last - span.first + 1;
  return span;
}

EdgeSet undirected_edges(const std::vector<int>& heads) {
  EdgeSet edges;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    int child = static_cast<int>(i) + 1;
    int head = heads[i];
    if (head == 0) continue;
    edges.emplace(std::min(child, head), std::max(child, head));
  }
  return edges;
}

EdgeSet gold_edges(const DepSentence& s) { return undirected_edges(s.heads()); }

} // namespace perturbkit
