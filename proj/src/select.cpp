#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "referee/select.hpp"

#include <nlohmann/json.hpp>

namespace referee {

namespace {

std::string trim(std::string_view view) {
  size_t begin = view.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return "";
  size_t end = view.find_last_not_of(" \t\r\n");
  return std::string(view.substr(begin, end - begin + 1));
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t next = text.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(text.substr(pos));
      break;
    }
    out.push_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::string terminal_segment(const std::string& dotted) {
  size_t dot = dotted.rfind('.');
  return dot == std::string::npos ? dotted : dotted.substr(dot + 1);
}

std::string drop_alias(const std::string& clause) {
  // "name as alias" -> "name"
  size_t pos = clause.find(" as ");
  return trim(pos == std::string::npos ? clause : clause.substr(0, pos));
}

std::vector<ImportRef> parse_python_import(const std::string& text) {
  std::string line = trim(text);
  if (line.starts_with("from ")) {
    size_t import_kw = line.find(" import ");
    if (import_kw == std::string::npos)
      fail(ErrCode::BadRequest, "not an import statement: " + line);
    std::string module = trim(line.substr(5, import_kw - 5));
    std::string names = line.substr(import_kw + 8);
    // strip parenthesized groups: from m import (a, b)
    std::erase(names, '(');
    std::erase(names, ')');
    std::vector<ImportRef> refs;
    for (const std::string& clause : split_on(names, ',')) {
      std::string name = drop_alias(clause);
      if (!name.empty()) refs.push_back({module, name});
    }
    if (module.empty() || refs.empty())
      fail(ErrCode::BadRequest, "not an import statement: " + line);
    return refs;
  }
  if (line.starts_with("import ")) {
    std::vector<ImportRef> refs;
    for (const std::string& clause : split_on(line.substr(7), ',')) {
      std::string module = drop_alias(clause);
      if (!module.empty()) refs.push_back({module, terminal_segment(module)});
    }
    if (refs.empty())
      fail(ErrCode::BadRequest, "not an import statement: " + line);
    return refs;
  }
  fail(ErrCode::BadRequest, "not an import statement: " + line);
}

std::vector<ImportRef> parse_java_import(const std::string& text) {
  std::string line = trim(text);
  if (!line.empty() && line.back() == ';') line.pop_back();
  line = trim(line);
  if (!line.starts_with("import"))
    fail(ErrCode::BadRequest, "not an import statement: " + line);
  line = trim(line.substr(6));
  bool is_static = false;
  if (line.starts_with("static ")) {
    is_static = true;
    line = trim(line.substr(7));
  }
  if (line.empty()) fail(ErrCode::BadRequest, "not an import statement: " + text);
  std::vector<std::string> parts = split_on(line, '.');
  if (parts.size() < 2) return {{line, line}};
  size_t name_segments = is_static ? std::min<size_t>(2, parts.size() - 1) : 1;
  std::string module;
  for (size_t i = 0; i + name_segments < parts.size(); ++i) {
    if (!module.empty()) module += ".";
    module += parts[i];
  }
  std::string name;
  for (size_t i = parts.size() - name_segments; i < parts.size(); ++i) {
    if (!name.empty()) name += ".";
    name += parts[i];
  }
  return {{module, name}};
}

}  // namespace

const char* dependency_class_name(DependencyClass cls) noexcept {
  switch (cls) {
    case DependencyClass::Internal: return "internal";
    case DependencyClass::CrossFile: return "cross_file";
    case DependencyClass::External: return "external";
  }
  return "internal";
}

ApiDocs ApiDocs::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrCode::Io, "cannot open api docs: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrCode::Parse, "invalid api docs json: " + std::string(ex.what()));
  }
  if (doc.is_object() && doc.contains("entries")) doc = doc["entries"];
  if (!doc.is_object())
    fail(ErrCode::Parse, "api docs must be a JSON object of name -> description");
  ApiDocs docs;
  for (auto& [key, value] : doc.items()) {
    if (!value.is_string())
      fail(ErrCode::Parse, "api docs entry is not a string: " + key);
    docs.entries[key] = value.get<std::string>();
  }
  return docs;
}

std::optional<std::pair<std::string, std::string>> ApiDocs::lookup(
    const std::string& dotted) const {
  std::string key = dotted;
  while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
  if (!key.empty() && key.back() == ')') {
    size_t paren = key.find('(');
    if (paren != std::string::npos) key.resize(paren);
  }
  auto hit = entries.find(key);
  if (hit != entries.end()) return std::make_pair(hit->first, hit->second);
  size_t dot = key.rfind('.');
  if (dot != std::string::npos) {
    auto parent = entries.find(key.substr(0, dot));
    if (parent != entries.end())
      return std::make_pair(parent->first, parent->second);
  }
  return std::nullopt;
}

ImportRef resolve_import(const std::string& import_text, Language lang) {
  return resolve_import_all(import_text, lang).front();
}

std::vector<ImportRef> resolve_import_all(const std::string& import_text,
                                          Language lang) {
  return lang == Language::Python ? parse_python_import(import_text)
                                  : parse_java_import(import_text);
}

namespace {

struct Collector {
  const ProjectContextGraph& graph;
  const ApiDocs& docs;
  SearchResult result;
  std::set<std::pair<std::string, std::string>> seen;

  void add(std::string entity_name, std::string content, DependencyClass cls,
           std::string source, const std::string& anchor) {
    if (content.empty()) return;
    if (!seen.emplace(entity_name, source).second) return;
    result.items.push_back({std::move(entity_name), std::move(content), cls,
                            std::move(source), anchor});
  }

  void miss(std::string name, std::string module, std::string reason) {
    result.misses.push_back({std::move(name), std::move(module), std::move(reason)});
  }
};

bool is_import_statement_node(const EntityNode& node) {
  return node.source_text.starts_with("import") ||
         node.source_text.starts_with("from");
}

std::string display_name(const EntityNode& import_node) {
  return is_import_statement_node(import_node) ? import_node.qualified_name
                                               : import_node.name;
}

// The dotted module whose file would hold the imported definition, plus the
// member path to look up inside it ("" means the module itself).
std::pair<std::string, std::string> import_target(const EntityNode& node,
                                                  Language lang) {
  if (!is_import_statement_node(node))
    return {node.import_module, node.import_name};
  if (lang == Language::Python) return {node.import_module, node.import_name};
  // Java statement: first segment of the imported name is the type, the rest
  // (static imports) a member inside it.
  std::string name = node.import_name;
  size_t dot = name.find('.');
  std::string head = dot == std::string::npos ? name : name.substr(0, dot);
  std::string rest = dot == std::string::npos ? "" : name.substr(dot + 1);
  std::string module = node.import_module;
  if (!head.empty() && head != "*")
    module = module.empty() ? head : module + "." + head;
  return {module, rest};
}

std::optional<std::string> find_module_file(const ProjectContextGraph& graph,
                                            const std::string& module,
                                            Language lang) {
  if (module.empty()) return std::nullopt;
  std::string slashed = module;
  std::replace(slashed.begin(), slashed.end(), '.', '/');
  std::vector<std::string> candidates;
  if (lang == Language::Python) {
    candidates.push_back(slashed + ".py");
    candidates.push_back(slashed + "/__init__.py");
  } else {
    candidates.push_back(slashed + ".java");
  }
  const auto& index = graph.file_index();
  for (const std::string& candidate : candidates) {
    if (index.count(candidate)) return candidate;
  }
  // repos often root modules below src/ or similar prefixes
  for (const std::string& candidate : candidates) {
    for (const auto& [file, ids] : index) {
      if (file.size() > candidate.size() + 1 && file.ends_with(candidate) &&
          file[file.size() - candidate.size() - 1] == '/')
        return file;
    }
  }
  return std::nullopt;
}

int member_kind_rank(NodeKind kind) {
  switch (kind) {
    case NodeKind::Class: return 0;
    case NodeKind::Function: return 1;
    case NodeKind::Variable: return 2;
    default: return 3;
  }
}

const EntityNode* find_member(const ProjectContextGraph& graph,
                              const std::string& file, const std::string& member) {
  const auto& index = graph.file_index();
  auto files = index.find(file);
  if (files == index.end()) return nullptr;
  const EntityNode* best = nullptr;
  for (const std::string& id : files->second) {
    const EntityNode* node = graph.find(id);
    if (!node) continue;
    if (member_kind_rank(node->kind) > 2) continue;
    if (node->name != member && node->qualified_name != member) continue;
    if (!best) {
      best = node;
      continue;
    }
    int lhs = member_kind_rank(node->kind);
    int rhs = member_kind_rank(best->kind);
    if (lhs < rhs || (lhs == rhs && node->span.start < best->span.start))
      best = node;
  }
  return best;
}

std::string content_of(const EntityNode& node) {
  if (node.kind == NodeKind::Class && !node.docstring.empty())
    return node.docstring;
  return node.source_text;
}

void resolve_import_item(const EntityNode& node, const std::string& anchor,
                         Collector& collect) {
  const ProjectContextGraph& graph = collect.graph;
  auto [module, member] = import_target(node, graph.language());
  if (member == "*") return;  // wildcard statements carry no single target
  auto file = find_module_file(graph, module, graph.language());
  if (file) {
    if (member.empty()) {
      // plain module import resolved in-repo: the module docstring stands in
      const EntityNode* module_node = nullptr;
      auto ids = graph.file_index().find(*file);
      if (ids != graph.file_index().end()) {
        for (const std::string& id : ids->second) {
          const EntityNode* candidate = graph.find(id);
          if (candidate && candidate->kind == NodeKind::Module) {
            module_node = candidate;
            break;
          }
        }
      }
      if (module_node && !module_node->docstring.empty()) {
        collect.add(display_name(node), module_node->docstring,
                    DependencyClass::CrossFile, *file, anchor);
      } else {
        collect.miss(display_name(node), module, "not-in-module");
      }
      return;
    }
    const EntityNode* target = find_member(graph, *file, member);
    if (!target) {
      collect.miss(member, module, "not-in-module");
      return;
    }
    collect.add(display_name(node), content_of(*target), DependencyClass::CrossFile,
                *file, anchor);
    return;
  }
  // external: documentation lookup by the fully qualified dotted name
  std::string key = node.qualified_name.empty() ? node.name : node.qualified_name;
  auto doc = collect.docs.lookup(key);
  if (!doc && node.name != key) doc = collect.docs.lookup(node.name);
  if (!doc) {
    collect.miss(key, module, "no-api-docs-entry");
    return;
  }
  collect.add(display_name(node), doc->second, DependencyClass::External,
              doc->first, anchor);
}

}  // namespace

SearchResult search_related(const ProjectContextGraph& graph,
                            const std::vector<const EntityNode*>& seeds,
                            const SearchConfig& config, const ApiDocs& docs,
                            const std::filesystem::path& /*repo_root*/) {
  Collector collect{graph, docs, {}, {}};
  if (config.hop_limit <= 0) return std::move(collect.result);

  std::set<std::string> seed_ids;
  for (const EntityNode* seed : seeds) {
    if (seed) seed_ids.insert(seed->id);
  }
  auto inside_input = [&](const EntityNode& node) {
    for (const EntityNode* seed : seeds) {
      if (seed && seed->file == node.file && seed->span.contains(node.span))
        return true;
    }
    return false;
  };

  for (const EntityNode* seed : seeds) {
    if (!seed) continue;
    // depth-tracked DFS; shorter rediscoveries are re-expanded so the reached
    // set matches breadth-first search under the same hop limit
    std::map<std::string, int> best_depth{{seed->id, 0}};
    std::vector<std::pair<const EntityNode*, int>> discovered;
    std::vector<std::pair<const EntityNode*, int>> stack{{seed, 0}};
    while (!stack.empty()) {
      auto [node, depth] = stack.back();
      stack.pop_back();
      if (depth >= config.hop_limit) continue;
      std::vector<std::pair<const EntityNode*, int>> fresh;
      for (const DependencyEdge* edge : graph.out_edges(node->id)) {
        const EntityNode* tail = graph.find(edge->tail);
        if (!tail) continue;
        int next_depth = depth + 1;
        auto hit = best_depth.find(tail->id);
        if (hit == best_depth.end()) {
          best_depth.emplace(tail->id, next_depth);
          discovered.emplace_back(tail, next_depth);
          fresh.emplace_back(tail, next_depth);
        } else if (next_depth < hit->second) {
          hit->second = next_depth;
          fresh.emplace_back(tail, next_depth);
        }
      }
      for (auto it = fresh.rbegin(); it != fresh.rend(); ++it)
        stack.push_back(*it);
    }

    for (auto& [node, depth] : discovered) {
      if (node->kind == NodeKind::Import) {
        resolve_import_item(*node, seed->id, collect);
      } else if (config.crucial_kinds.count(node->kind)) {
        if (seed_ids.count(node->id) || inside_input(*node)) continue;
        DependencyClass cls = node->file == seed->file ? DependencyClass::Internal
                                                       : DependencyClass::CrossFile;
        collect.add(node->name, content_of(*node), cls, node->file, seed->id);
      }
    }
  }
  return std::move(collect.result);
}

std::string format_related(const std::vector<RelatedInfo>& related) {
  std::string out;
  for (const RelatedInfo& item : related) {
    if (!out.empty()) out += "\n\n";
    out += "# " + item.entity_name + " # " + item.content;
  }
  return out;
}

std::string format_context(const std::vector<RelatedInfo>& related,
                           const std::string& input_code) {
  if (related.empty()) return input_code;
  return format_related(related) + "\n\n" + input_code;
}

}  // namespace referee
