#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "referee/cst.hpp"

#include <nlohmann/json.hpp>

namespace referee {

enum class NodeKind { Function, Class, Variable, Import, Module, Parameter, CallSite };
enum class Relation { Assign, As, Refers, Typeof, Inherits };

const char* node_kind_name(NodeKind kind) noexcept;    // "function" | ...
const char* relation_name(Relation rel) noexcept;      // "assign" | ...
std::optional<Relation> relation_from_name(std::string_view name) noexcept;

struct ByteSpan {
  uint32_t start = 0;
  uint32_t end = 0;
  bool intersects(const ByteSpan& other) const {
    return start < other.end && other.start < end;
  }
  bool contains(const ByteSpan& other) const {
    return start <= other.start && other.end <= end;
  }
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct EntityNode {
  std::string id;
  NodeKind kind = NodeKind::Variable;
  std::string name;
  std::string qualified_name;
  std::string file;
  ByteSpan span;
  std::string source_text;
  std::string docstring;
  // Import nodes only: the resolved (module, name) pair of the binding.
  std::string import_module;
  std::string import_name;
};

struct DependencyEdge {
  std::string head;
  Relation relation = Relation::Refers;
  std::string tail;
  friend bool operator==(const DependencyEdge&, const DependencyEdge&) = default;
};

struct UnresolvedRef {
  std::string file;
  std::string name;
  ByteSpan span;
};

struct ParseWarning {
  std::string file;
  std::string message;
};

// Stable content-derived node identity: hex FNV-1a over (file, span, kind, name).
std::string make_node_id(const std::string& file, ByteSpan span, NodeKind kind,
                         const std::string& name);

class ProjectContextGraph {
 public:
  ProjectContextGraph() = default;
  ProjectContextGraph(Language lang, std::map<std::string, EntityNode> nodes,
                      std::vector<DependencyEdge> edges,
                      std::map<std::string, std::vector<std::string>> file_index,
                      std::vector<UnresolvedRef> unresolved,
                      std::vector<ParseWarning> warnings);

  Language language() const { return language_; }
  const std::map<std::string, EntityNode>& nodes() const { return nodes_; }
  const std::vector<DependencyEdge>& edges() const { return edges_; }
  const std::map<std::string, std::vector<std::string>>& file_index() const {
    return file_index_;
  }
  const std::vector<UnresolvedRef>& unresolved() const { return unresolved_; }
  const std::vector<ParseWarning>& warnings() const { return warnings_; }

  const EntityNode* find(const std::string& id) const;
  // Out-edges of a node in insertion (source) order.
  const std::vector<const DependencyEdge*>& out_edges(const std::string& id) const;

  nlohmann::json dump_json() const;

 private:
  Language language_ = Language::Python;
  std::map<std::string, EntityNode> nodes_;
  std::vector<DependencyEdge> edges_;
  std::map<std::string, std::vector<std::string>> file_index_;
  std::vector<UnresolvedRef> unresolved_;
  std::vector<ParseWarning> warnings_;
  std::unordered_map<std::string, std::vector<const DependencyEdge*>> adjacency_;
};

ProjectContextGraph build_graph(const std::filesystem::path& repo_root, Language language);

// Normalized syntactic construct descriptor, the input to relation
// classification. Total over all statement/expression shapes the builders
// encounter; shapes without dependency semantics map to nullopt.
struct SyntaxConstruct {
  enum class Kind {
    Assignment,       // x = expr, augmented assignment, field initializer
    AsBinding,        // with ... as x / except ... as e / catch / try-resource
    Reference,        // identifier or attribute use of an existing entity
    TypeAnnotation,   // x: T, def f() -> T, Java declared types
    BaseClassListing, // class C(B) / class C extends B / implements I
    Other,
  };
  Kind kind = Kind::Other;
};

std::optional<Relation> classify_relation(const SyntaxConstruct& construct);

// Nodes whose span intersects [span.start, span.end) in the given file, plus
// Import nodes of that file referenced from inside the range. Module nodes are
// containers, not entities of the input code, and are excluded.
std::vector<const EntityNode*> entities_in(const ProjectContextGraph& graph,
                                           const std::string& file, ByteSpan span);

// Internal: per-language CST walkers used by build_graph. Each produces the
// nodes/edges/unresolved refs for one file; build_graph merges results.
struct FileGraph {
  std::vector<EntityNode> nodes;
  std::vector<DependencyEdge> edges;
  std::vector<UnresolvedRef> unresolved;
};

FileGraph build_file_graph_python(const cst::SourceTree& tree, const std::string& rel_path);
FileGraph build_file_graph_java(const cst::SourceTree& tree, const std::string& rel_path);

}  // namespace referee
