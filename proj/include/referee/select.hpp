#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "referee/graph.hpp"

namespace referee {

enum class DependencyClass { Internal, CrossFile, External };

const char* dependency_class_name(DependencyClass cls) noexcept;

struct RelatedInfo {
  std::string entity_name;
  std::string content;
  DependencyClass dep_class = DependencyClass::Internal;
  std::string source;        // repo file (Internal/CrossFile) or docs key (External)
  std::string anchor_entity; // id of the input-code entity that triggered selection
};

struct ApiDocs {
  std::map<std::string, std::string> entries;

  static ApiDocs load(const std::filesystem::path& path);
  // Exact match after normalization (trailing parens/whitespace stripped); on
  // miss retries once with the terminal attribute dropped.
  std::optional<std::pair<std::string, std::string>> lookup(const std::string& dotted) const;
};

struct SearchConfig {
  int hop_limit = 1;
  std::set<NodeKind> crucial_kinds = {NodeKind::Function, NodeKind::Class,
                                      NodeKind::Variable};
};

struct ImportRef {
  std::string module;
  std::string name;
  friend bool operator==(const ImportRef&, const ImportRef&) = default;
};

// First bound name of the statement; resolve_import_all returns every binding
// of a multi-name import in source order.
ImportRef resolve_import(const std::string& import_text, Language lang);
std::vector<ImportRef> resolve_import_all(const std::string& import_text, Language lang);

struct LookupMiss {
  std::string name;    // dotted name or identifier that failed to resolve
  std::string module;  // module it was expected in, empty for docs misses
  std::string reason;  // "not-in-module" | "no-api-docs-entry" | ...
};

struct SearchResult {
  std::vector<RelatedInfo> items;
  std::vector<LookupMiss> misses;
};

SearchResult search_related(const ProjectContextGraph& graph,
                            const std::vector<const EntityNode*>& seeds,
                            const SearchConfig& config, const ApiDocs& docs,
                            const std::filesystem::path& repo_root);

// `# {name} # {content}` blocks separated by blank lines.
std::string format_related(const std::vector<RelatedInfo>& related);
// Blocks followed by the verbatim input code; identity when related is empty.
std::string format_context(const std::vector<RelatedInfo>& related,
                           const std::string& input_code);

}  // namespace referee
