#include "referee/cst.hpp"

#include <cstring>

extern "C" {
const TSLanguage* tree_sitter_python(void);
const TSLanguage* tree_sitter_java(void);
}

namespace referee {

const char* language_name(Language lang) noexcept {
  return lang == Language::Python ? "python" : "java";
}

Language language_from_name(std::string_view name) {
  if (name == "python" || name == "py") return Language::Python;
  if (name == "java") return Language::Java;
  fail(ErrCode::BadRequest, "unknown language: " + std::string(name));
}

namespace cst {

bool SourceTree::has_parse_error() const { return ts_node_has_error(root()); }

SourceTree parse(std::string source, Language lang) {
  ParserPtr parser(ts_parser_new());
  const TSLanguage* grammar =
      lang == Language::Python ? tree_sitter_python() : tree_sitter_java();
  if (!ts_parser_set_language(parser.get(), grammar))
    fail(ErrCode::Internal, "tree-sitter rejected the bundled grammar");
  TSTree* raw = ts_parser_parse_string(parser.get(), nullptr, source.data(),
                                       static_cast<uint32_t>(source.size()));
  if (!raw) fail(ErrCode::Parse, "parser returned no tree");
  return SourceTree(std::move(source), TreePtr(raw), lang);
}

std::string_view node_text(TSNode node, const std::string& source) {
  uint32_t start = ts_node_start_byte(node);
  uint32_t end = ts_node_end_byte(node);
  return std::string_view(source).substr(start, end - start);
}

std::string node_kind(TSNode node) {
  const char* type = ts_node_type(node);
  return type ? type : "";
}

TSNode child_by_field(TSNode node, const char* field) {
  return ts_node_child_by_field_name(node, field,
                                     static_cast<uint32_t>(strlen(field)));
}

std::vector<TSNode> named_children(TSNode node) {
  uint32_t count = ts_node_named_child_count(node);
  std::vector<TSNode> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) out.push_back(ts_node_named_child(node, i));
  return out;
}

std::vector<TSNode> children_of_kind(TSNode node, std::string_view kind) {
  std::vector<TSNode> out;
  for (TSNode child : named_children(node)) {
    if (kind == ts_node_type(child)) out.push_back(child);
  }
  return out;
}

}  // namespace cst
}  // namespace referee
