#pragma once

#include <tree_sitter/api.h>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "referee/error.hpp"

namespace referee {

enum class Language { Python, Java };

const char* language_name(Language lang) noexcept;  // "python" | "java"
Language language_from_name(std::string_view name); // throws BadRequest

namespace cst {

struct TreeDeleter {
  void operator()(TSTree* t) const noexcept { if (t) ts_tree_delete(t); }
};
struct ParserDeleter {
  void operator()(TSParser* p) const noexcept { if (p) ts_parser_delete(p); }
};

using TreePtr = std::unique_ptr<TSTree, TreeDeleter>;
using ParserPtr = std::unique_ptr<TSParser, ParserDeleter>;

// Owns the parsed tree together with the source bytes the node spans refer to.
class SourceTree {
 public:
  SourceTree(std::string source, TreePtr tree, Language lang)
      : source_(std::move(source)), tree_(std::move(tree)), lang_(lang) {}

  TSNode root() const { return ts_tree_root_node(tree_.get()); }
  const std::string& source() const { return source_; }
  Language language() const { return lang_; }
  bool has_parse_error() const;

 private:
  std::string source_;
  TreePtr tree_;
  Language lang_;
};

// Parses in-memory source. Returns a tree even when it contains ERROR nodes;
// callers decide whether to keep or skip. Throws Parse only if the parser
// itself rejects the language/input outright.
SourceTree parse(std::string source, Language lang);

std::string_view node_text(TSNode node, const std::string& source);
std::string node_kind(TSNode node);
TSNode child_by_field(TSNode node, const char* field);
std::vector<TSNode> named_children(TSNode node);
std::vector<TSNode> children_of_kind(TSNode node, std::string_view kind);

}  // namespace cst
}  // namespace referee
