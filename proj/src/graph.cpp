#include "referee/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <tuple>

#include "referee/error.hpp"

namespace referee {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrCode::Io, "cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

const char* node_kind_name(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::Function:  return "function";
    case NodeKind::Class:     return "class";
    case NodeKind::Variable:  return "variable";
    case NodeKind::Import:    return "import";
    case NodeKind::Module:    return "module";
    case NodeKind::Parameter: return "parameter";
    case NodeKind::CallSite:  return "call_site";
  }
  return "variable";
}

const char* relation_name(Relation rel) noexcept {
  switch (rel) {
    case Relation::Assign:   return "assign";
    case Relation::As:       return "as";
    case Relation::Refers:   return "refers";
    case Relation::Typeof:   return "typeof";
    case Relation::Inherits: return "inherits";
  }
  return "refers";
}

std::optional<Relation> relation_from_name(std::string_view name) noexcept {
  if (name == "assign") return Relation::Assign;
  if (name == "as") return Relation::As;
  if (name == "refers") return Relation::Refers;
  if (name == "typeof") return Relation::Typeof;
  if (name == "inherits") return Relation::Inherits;
  return std::nullopt;
}

std::string make_node_id(const std::string& file, ByteSpan span, NodeKind kind,
                         const std::string& name) {
  uint64_t hash = 1469598103934665603ull;
  auto mix = [&hash](std::string_view bytes) {
    for (unsigned char c : bytes) {
      hash ^= c;
      hash *= 1099511628211ull;
    }
    hash ^= 0xff;
    hash *= 1099511628211ull;
  };
  mix(file);
  mix(std::to_string(span.start));
  mix(std::to_string(span.end));
  mix(node_kind_name(kind));
  mix(name);
  char buf[17];
  snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf, 16);
}

ProjectContextGraph::ProjectContextGraph(
    Language lang, std::map<std::string, EntityNode> nodes,
    std::vector<DependencyEdge> edges,
    std::map<std::string, std::vector<std::string>> file_index,
    std::vector<UnresolvedRef> unresolved, std::vector<ParseWarning> warnings)
    : language_(lang),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      file_index_(std::move(file_index)),
      unresolved_(std::move(unresolved)),
      warnings_(std::move(warnings)) {
  for (const auto& edge : edges_) adjacency_[edge.head].push_back(&edge);
}

const EntityNode* ProjectContextGraph::find(const std::string& id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const std::vector<const DependencyEdge*>& ProjectContextGraph::out_edges(
    const std::string& id) const {
  static const std::vector<const DependencyEdge*> kEmpty;
  auto it = adjacency_.find(id);
  return it == adjacency_.end() ? kEmpty : it->second;
}

json ProjectContextGraph::dump_json() const {
  json nodes = json::array();
  for (const auto& [id, node] : nodes_) {
    nodes.push_back({{"id", node.id},
                     {"kind", node_kind_name(node.kind)},
                     {"name", node.name},
                     {"qualified_name", node.qualified_name},
                     {"file", node.file},
                     {"span", {node.span.start, node.span.end}},
                     {"docstring", node.docstring}});
  }
  json edges = json::array();
  for (const auto& edge : edges_) {
    edges.push_back({{"head", edge.head},
                     {"relation", relation_name(edge.relation)},
                     {"tail", edge.tail}});
  }
  return json{{"nodes", nodes}, {"edges", edges}};
}

std::optional<Relation> classify_relation(const SyntaxConstruct& construct) {
  switch (construct.kind) {
    case SyntaxConstruct::Kind::Assignment:       return Relation::Assign;
    case SyntaxConstruct::Kind::AsBinding:        return Relation::As;
    case SyntaxConstruct::Kind::Reference:        return Relation::Refers;
    case SyntaxConstruct::Kind::TypeAnnotation:   return Relation::Typeof;
    case SyntaxConstruct::Kind::BaseClassListing: return Relation::Inherits;
    case SyntaxConstruct::Kind::Other:            return std::nullopt;
  }
  return std::nullopt;
}

ProjectContextGraph build_graph(const std::filesystem::path& repo_root,
                                Language language) {
  std::error_code ec;
  if (!std::filesystem::is_directory(repo_root, ec))
    fail(ErrCode::Io, "repository not found: " + repo_root.string());

  std::string ext = language == Language::Python ? ".py" : ".java";
  std::vector<std::filesystem::path> files;
  for (auto it = std::filesystem::recursive_directory_iterator(
           repo_root, std::filesystem::directory_options::skip_permission_denied);
       it != std::filesystem::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file(ec) && it->path().extension() == ext)
      files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());

  struct FileResult {
    std::string rel_path;
    FileGraph graph;
    std::optional<std::string> warning;
  };

  auto parse_one = [&](const std::filesystem::path& path) -> FileResult {
    FileResult result;
    result.rel_path =
        std::filesystem::relative(path, repo_root).generic_string();
    std::string source;
    try {
      source = read_file(path);
    } catch (const Error& e) {
      result.warning = e.what();
      return result;
    }
    cst::SourceTree tree = cst::parse(std::move(source), language);
    if (tree.has_parse_error()) {
      result.warning = "parse error, file skipped";
      return result;
    }
    result.graph = language == Language::Python
                       ? build_file_graph_python(tree, result.rel_path)
                       : build_file_graph_java(tree, result.rel_path);
    return result;
  };

  std::vector<FileResult> results(files.size());
  if (files.size() > 1) {
    std::vector<std::future<FileResult>> futures;
    futures.reserve(files.size());
    for (const auto& path : files)
      futures.push_back(std::async(std::launch::async, parse_one, path));
    for (size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
  } else {
    for (size_t i = 0; i < files.size(); ++i) results[i] = parse_one(files[i]);
  }

  // Single-writer merge in sorted file order.
  std::map<std::string, EntityNode> nodes;
  std::vector<DependencyEdge> edges;
  std::set<std::tuple<std::string, Relation, std::string>> edge_seen;
  std::map<std::string, std::vector<std::string>> file_index;
  std::vector<UnresolvedRef> unresolved;
  std::vector<ParseWarning> warnings;

  for (auto& result : results) {
    if (result.warning) {
      warnings.push_back({result.rel_path, *result.warning});
      continue;
    }
    std::vector<std::pair<ByteSpan, std::string>> ids;
    for (auto& node : result.graph.nodes) {
      ids.emplace_back(node.span, node.id);
      auto [it, inserted] = nodes.emplace(node.id, std::move(node));
      if (!inserted)
        warnings.push_back({result.rel_path, "duplicate entity id " + it->first});
    }
    std::sort(ids.begin(), ids.end(), [](const auto& a, const auto& b) {
      return a.first.start != b.first.start ? a.first.start < b.first.start
                                            : a.second < b.second;
    });
    auto& index = file_index[result.rel_path];
    for (auto& [span, id] : ids) index.push_back(id);
    for (auto& edge : result.graph.edges) {
      if (edge.head == edge.tail) continue;
      if (edge_seen.emplace(edge.head, edge.relation, edge.tail).second)
        edges.push_back(std::move(edge));
    }
    for (auto& ref : result.graph.unresolved) unresolved.push_back(std::move(ref));
  }

  for (const auto& edge : edges) {
    if (!nodes.count(edge.head) || !nodes.count(edge.tail))
      fail(ErrCode::Internal, "edge endpoint missing from node set");
  }

  return ProjectContextGraph(language, std::move(nodes), std::move(edges),
                             std::move(file_index), std::move(unresolved),
                             std::move(warnings));
}

std::vector<const EntityNode*> entities_in(const ProjectContextGraph& graph,
                                           const std::string& file, ByteSpan span) {
  auto it = graph.file_index().find(file);
  if (it == graph.file_index().end())
    fail(ErrCode::Io, "unknown file: " + file);
  std::vector<const EntityNode*> out;
  if (span.start >= span.end) return out;

  std::set<std::string> chosen;
  for (const auto& id : it->second) {
    const EntityNode* node = graph.find(id);
    if (!node || node->kind == NodeKind::Module) continue;
    if (node->span.intersects(span)) {
      if (chosen.insert(id).second) out.push_back(node);
    }
  }
  // Imports of this file referenced from inside the range.
  for (const auto& id : it->second) {
    const EntityNode* head = graph.find(id);
    if (!head || !head->span.intersects(span) || head->kind == NodeKind::Module)
      continue;
    for (const DependencyEdge* edge : graph.out_edges(id)) {
      const EntityNode* tail = graph.find(edge->tail);
      if (tail && tail->kind == NodeKind::Import && tail->file == file &&
          chosen.insert(tail->id).second)
        out.push_back(tail);
    }
  }
  std::sort(out.begin(), out.end(), [](const EntityNode* a, const EntityNode* b) {
    return a->span.start != b->span.start ? a->span.start < b->span.start
                                          : a->id < b->id;
  });
  return out;
}

}  // namespace referee
