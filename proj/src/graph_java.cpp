#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "referee/graph.hpp"

namespace referee {

namespace {

using cst::child_by_field;
using cst::named_children;
using cst::node_text;

std::string module_path_of_java(const std::string& rel_path) {
  std::string mod = rel_path;
  if (mod.size() > 5 && mod.ends_with(".java")) mod.resize(mod.size() - 5);
  std::replace(mod.begin(), mod.end(), '/', '.');
  return mod;
}

std::string join_dotted(const std::vector<std::string>& parts, size_t begin,
                        size_t end) {
  std::string out;
  for (size_t i = begin; i < end && i < parts.size(); ++i) {
    if (!out.empty()) out += ".";
    out += parts[i];
  }
  return out;
}

std::string strip_javadoc(std::string_view comment) {
  if (!comment.starts_with("/**")) return "";
  comment.remove_prefix(3);
  if (comment.ends_with("*/")) comment.remove_suffix(2);
  std::string out;
  size_t pos = 0;
  while (pos <= comment.size()) {
    size_t nl = comment.find('\n', pos);
    std::string_view line = comment.substr(
        pos, nl == std::string_view::npos ? comment.size() - pos : nl - pos);
    size_t start = line.find_first_not_of(" \t");
    if (start != std::string_view::npos) {
      line.remove_prefix(start);
      if (line.starts_with('*')) {
        line.remove_prefix(1);
        if (line.starts_with(' ')) line.remove_prefix(1);
      }
    } else {
      line = "";
    }
    while (line.ends_with('\r') || line.ends_with(' ') || line.ends_with('\t'))
      line.remove_suffix(1);
    if (!out.empty()) out += "\n";
    out += std::string(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  while (!out.empty() && (out.front() == '\n')) out.erase(out.begin());
  while (!out.empty() && (out.back() == '\n')) out.pop_back();
  return out;
}

struct JvScope {
  enum class Kind { Module, Class, Method, Shadow };
  Kind kind = Kind::Module;
  std::string qual;
  long entity = -1;
  std::map<std::string, size_t> bindings;
  std::set<std::string> shadows;
};

class JvBuilder {
 public:
  JvBuilder(const cst::SourceTree& tree, std::string rel_path)
      : tree_(tree), src_(tree.source()), file_(std::move(rel_path)),
        module_name_(module_path_of_java(file_)) {}

  FileGraph run() {
    TSNode root = tree_.root();
    size_t module = add_node(NodeKind::Module, module_name_, module_name_,
                             {0, static_cast<uint32_t>(src_.size())}, "", "");
    scopes_.push_back({JvScope::Kind::Module, "", static_cast<long>(module), {}, {}});
    for (TSNode decl : named_children(root)) hoist_top_level(decl);
    for (TSNode decl : named_children(root)) {
      if (is_type_declaration(kind_of(decl))) walk_type(decl);
    }
    finish_ids();
    return std::move(out_);
  }

 private:
  const cst::SourceTree& tree_;
  const std::string& src_;
  std::string file_;
  std::string module_name_;
  FileGraph out_;
  std::vector<JvScope> scopes_;
  std::map<std::string, size_t> usage_registry_;
  std::set<std::tuple<size_t, Relation, size_t>> edge_seen_;
  std::vector<std::tuple<size_t, Relation, size_t>> edges_;

  static bool is_type_declaration(const std::string& kind) {
    return kind == "class_declaration" || kind == "interface_declaration" ||
           kind == "enum_declaration" || kind == "record_declaration" ||
           kind == "annotation_type_declaration";
  }

  ByteSpan span_of(TSNode node) const {
    return {ts_node_start_byte(node), ts_node_end_byte(node)};
  }
  std::string text(TSNode node) const { return std::string(node_text(node, src_)); }
  std::string kind_of(TSNode node) const { return cst::node_kind(node); }

  size_t add_node(NodeKind kind, std::string name, std::string qual, ByteSpan span,
                  std::string source_text, std::string docstring = "",
                  std::string import_module = "", std::string import_name = "") {
    EntityNode node;
    node.kind = kind;
    node.name = std::move(name);
    node.qualified_name = std::move(qual);
    node.file = file_;
    node.span = span;
    node.source_text = std::move(source_text);
    node.docstring = std::move(docstring);
    node.import_module = std::move(import_module);
    node.import_name = std::move(import_name);
    out_.nodes.push_back(std::move(node));
    return out_.nodes.size() - 1;
  }

  void emit(size_t head, Relation rel, size_t tail) {
    if (head == tail) return;
    if (edge_seen_.emplace(head, rel, tail).second)
      edges_.emplace_back(head, rel, tail);
  }

  void finish_ids() {
    for (auto& node : out_.nodes)
      node.id = make_node_id(node.file, node.span, node.kind, node.name);
    out_.edges.reserve(edges_.size());
    for (auto& [h, r, t] : edges_)
      out_.edges.push_back({out_.nodes[h].id, r, out_.nodes[t].id});
  }

  std::string qual_for(const std::string& name) const {
    const std::string& prefix = scopes_.back().qual;
    return prefix.empty() ? name : prefix + "." + name;
  }

  size_t current_head() const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (it->entity >= 0) return static_cast<size_t>(it->entity);
    }
    return 0;
  }

  void bind(const std::string& name, size_t node) {
    scopes_.back().bindings.emplace(name, node);
  }

  std::optional<size_t> resolve(const std::string& name, bool* shadowed = nullptr) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (it->shadows.count(name)) {
        if (shadowed) *shadowed = true;
        return std::nullopt;
      }
      auto hit = it->bindings.find(name);
      if (hit != it->bindings.end()) return hit->second;
    }
    return std::nullopt;
  }

  void record_unresolved(const std::string& name, TSNode node) {
    out_.unresolved.push_back({file_, name, span_of(node)});
  }

  std::string javadoc_of(TSNode decl) const {
    TSNode prev = ts_node_prev_named_sibling(decl);
    if (ts_node_is_null(prev)) return "";
    if (cst::node_kind(prev) != "block_comment") return "";
    return strip_javadoc(node_text(prev, src_));
  }

  // ---- hoisting -------------------------------------------------------------

  void hoist_top_level(TSNode decl) {
    std::string kind = kind_of(decl);
    if (kind == "import_declaration") {
      hoist_import(decl);
    } else if (is_type_declaration(kind)) {
      hoist_type(decl);
    }
  }

  void hoist_import(TSNode decl) {
    bool is_static = false;
    bool wildcard = false;
    TSNode path{};
    for (uint32_t i = 0; i < ts_node_child_count(decl); ++i) {
      TSNode child = ts_node_child(decl, i);
      std::string kind = cst::node_kind(child);
      if (kind == "static") is_static = true;
      else if (kind == "asterisk") wildcard = true;
      else if (kind == "scoped_identifier" || kind == "identifier") path = child;
    }
    if (ts_node_is_null(path)) return;
    std::string dotted = text(path);
    std::vector<std::string> parts = split_dotted(dotted);
    if (parts.empty()) return;

    std::string stmt_text = text(decl);
    ByteSpan stmt_span = span_of(decl);
    if (wildcard) {
      add_node(NodeKind::Import, dotted + ".*", dotted + ".*", stmt_span,
               stmt_text, "", dotted, "*");
      return;
    }
    size_t name_segments = is_static ? std::min<size_t>(2, parts.size()) : 1;
    std::string module = join_dotted(parts, 0, parts.size() - name_segments);
    std::string imported = join_dotted(parts, parts.size() - name_segments, parts.size());
    size_t node = add_node(NodeKind::Import, dotted, dotted, stmt_span, stmt_text,
                           "", module, imported);
    bind(parts.back(), node);
  }

  static std::vector<std::string> split_dotted(const std::string& dotted) {
    std::vector<std::string> parts;
    size_t pos = 0;
    while (pos <= dotted.size()) {
      size_t dot = dotted.find('.', pos);
      if (dot == std::string::npos) {
        parts.push_back(dotted.substr(pos));
        break;
      }
      parts.push_back(dotted.substr(pos, dot - pos));
      pos = dot + 1;
    }
    return parts;
  }

  void hoist_type(TSNode decl) {
    TSNode name_node = child_by_field(decl, "name");
    if (ts_node_is_null(name_node)) return;
    std::string name = text(name_node);
    size_t node = add_node(NodeKind::Class, name, qual_for(name), span_of(decl),
                           text(decl), javadoc_of(decl));
    bind(name, node);
  }

  void hoist_member(TSNode member) {
    std::string kind = kind_of(member);
    if (kind == "method_declaration" || kind == "constructor_declaration") {
      TSNode name_node = child_by_field(member, "name");
      if (ts_node_is_null(name_node)) return;
      std::string name = text(name_node);
      size_t node = add_node(NodeKind::Function, name, qual_for(name),
                             span_of(member), text(member), javadoc_of(member));
      bind(name, node);
    } else if (kind == "field_declaration" || kind == "constant_declaration") {
      for (TSNode declarator : cst::children_of_kind(member, "variable_declarator")) {
        TSNode name_node = child_by_field(declarator, "name");
        if (ts_node_is_null(name_node)) continue;
        std::string name = text(name_node);
        size_t node = add_node(NodeKind::Variable, name, qual_for(name),
                               span_of(member), text(member), javadoc_of(member));
        bind(name, node);
      }
    } else if (is_type_declaration(kind)) {
      hoist_type(member);
    } else if (kind == "enum_constant") {
      TSNode name_node = child_by_field(member, "name");
      if (ts_node_is_null(name_node)) return;
      std::string name = text(name_node);
      size_t node = add_node(NodeKind::Variable, name, qual_for(name),
                             span_of(member), text(member), javadoc_of(member));
      bind(name, node);
    }
  }

  // ---- walking --------------------------------------------------------------

  void walk_type(TSNode decl) {
    TSNode name_node = child_by_field(decl, "name");
    if (ts_node_is_null(name_node)) return;
    auto binding = resolve(text(name_node));
    if (!binding) return;
    size_t cls = *binding;

    TSNode superclass = child_by_field(decl, "superclass");
    if (!ts_node_is_null(superclass)) {
      for (TSNode type : named_children(superclass)) inherit_link(cls, type);
    }
    TSNode interfaces = child_by_field(decl, "interfaces");
    if (!ts_node_is_null(interfaces)) {
      for (TSNode list : cst::children_of_kind(interfaces, "type_list")) {
        for (TSNode type : named_children(list)) inherit_link(cls, type);
      }
    }
    // `interface A extends B, C`
    for (TSNode clause : cst::children_of_kind(decl, "extends_interfaces")) {
      for (TSNode list : cst::children_of_kind(clause, "type_list")) {
        for (TSNode type : named_children(list)) inherit_link(cls, type);
      }
    }

    scopes_.push_back({JvScope::Kind::Class, out_.nodes[cls].qualified_name,
                       static_cast<long>(cls), {}, {}});
    TSNode body = child_by_field(decl, "body");
    if (!ts_node_is_null(body)) {
      for (TSNode member : named_children(body)) hoist_member(member);
      for (TSNode member : named_children(body)) walk_member(member);
    }
    scopes_.pop_back();
  }

  void inherit_link(size_t cls, TSNode type) {
    std::string kind = kind_of(type);
    if (kind == "generic_type") {
      auto inner = named_children(type);
      if (!inner.empty()) inherit_link(cls, inner[0]);
      for (TSNode child : cst::children_of_kind(type, "type_arguments"))
        walk_node(child);
      return;
    }
    if (kind == "type_identifier" || kind == "scoped_type_identifier") {
      if (auto target = type_entity(type)) emit(cls, Relation::Inherits, *target);
    }
  }

  void walk_member(TSNode member) {
    std::string kind = kind_of(member);
    if (kind == "method_declaration" || kind == "constructor_declaration") {
      walk_method(member);
    } else if (kind == "field_declaration" || kind == "constant_declaration") {
      walk_variable_declaration(member, /*register_locals=*/false);
    } else if (is_type_declaration(kind)) {
      walk_type(member);
    } else if (kind == "static_initializer" || kind == "block") {
      TSNode body = child_by_field(member, "body");
      walk_node(ts_node_is_null(body) ? member : body);
    } else if (kind == "enum_body_declarations" || kind == "enum_constant") {
      for (TSNode child : named_children(member)) {
        if (kind_of(child) == "argument_list") walk_node(child);
        else walk_member(child);
      }
    }
  }

  void walk_method(TSNode def) {
    TSNode name_node = child_by_field(def, "name");
    if (ts_node_is_null(name_node)) return;
    std::string name = text(name_node);
    // overloads share a binding; locate this declaration's own node by span
    size_t method = 0;
    bool found = false;
    ByteSpan self = span_of(def);
    for (size_t i = 0; i < out_.nodes.size(); ++i) {
      const EntityNode& node = out_.nodes[i];
      if (node.kind == NodeKind::Function && node.name == name &&
          node.span.start == self.start && node.span.end == self.end) {
        method = i;
        found = true;
        break;
      }
    }
    if (!found) return;

    for (TSNode mods : cst::children_of_kind(def, "modifiers")) walk_annotations(mods);

    scopes_.push_back({JvScope::Kind::Method, out_.nodes[method].qualified_name,
                       static_cast<long>(method), {}, {}});
    TSNode params = child_by_field(def, "parameters");
    if (!ts_node_is_null(params)) walk_parameters(params);
    TSNode ret = child_by_field(def, "type");
    if (!ts_node_is_null(ret)) type_link(ret, method);
    for (TSNode thrown : cst::children_of_kind(def, "throws")) {
      for (TSNode type : named_children(thrown)) {
        if (auto entity = type_entity(type))
          emit(method, Relation::Refers, *entity);
      }
    }
    TSNode body = child_by_field(def, "body");
    if (!ts_node_is_null(body)) walk_node(body);
    scopes_.pop_back();
  }

  void walk_annotations(TSNode mods) {
    for (TSNode child : named_children(mods)) {
      std::string kind = kind_of(child);
      if (kind == "annotation" || kind == "marker_annotation") {
        TSNode name = child_by_field(child, "name");
        if (!ts_node_is_null(name)) {
          if (auto entity = chain_entity(name))
            emit(current_head(), Relation::Refers, *entity);
        }
        TSNode args = child_by_field(child, "arguments");
        if (!ts_node_is_null(args)) walk_node(args);
      }
    }
  }

  void walk_parameters(TSNode params) {
    const std::string& fn_qual = scopes_.back().qual;
    for (TSNode param : named_children(params)) {
      std::string kind = kind_of(param);
      if (kind != "formal_parameter" && kind != "spread_parameter") continue;
      TSNode name_node = child_by_field(param, "name");
      if (kind == "spread_parameter" && ts_node_is_null(name_node)) {
        for (TSNode child : named_children(param)) {
          if (kind_of(child) == "variable_declarator")
            name_node = child_by_field(child, "name");
          else if (kind_of(child) == "identifier")
            name_node = child;
        }
      }
      if (ts_node_is_null(name_node)) continue;
      std::string name = text(name_node);
      std::string qual = fn_qual.empty() ? name : fn_qual + "." + name;
      size_t node = add_node(NodeKind::Parameter, name, qual, span_of(param),
                             text(param));
      bind(name, node);
      TSNode type = child_by_field(param, "type");
      if (!ts_node_is_null(type)) type_link(type, node);
    }
  }

  void walk_variable_declaration(TSNode decl, bool register_locals) {
    TSNode type = child_by_field(decl, "type");
    for (TSNode declarator : cst::children_of_kind(decl, "variable_declarator")) {
      TSNode name_node = child_by_field(declarator, "name");
      if (ts_node_is_null(name_node)) continue;
      std::string name = text(name_node);
      std::optional<size_t> var;
      if (register_locals) {
        if (!scopes_.back().bindings.count(name)) {
          size_t node = add_node(NodeKind::Variable, name, qual_for(name),
                                 span_of(decl), text(decl));
          bind(name, node);
          var = node;
        } else {
          var = resolve(name);
        }
      } else {
        var = resolve(name);
      }
      if (var && !ts_node_is_null(type)) type_link(type, *var);
      TSNode value = child_by_field(declarator, "value");
      if (!ts_node_is_null(value)) {
        if (var) assign_from(*var, value);
        else walk_node(value);
      }
    }
  }

  void assign_from(size_t target, TSNode value) {
    TSNode root = assign_root(value);
    std::optional<size_t> root_entity;
    if (!ts_node_is_null(root)) root_entity = value_entity(root);
    if (root_entity) {
      emit(target, Relation::Assign, *root_entity);
      if (out_.nodes[*root_entity].kind == NodeKind::Class &&
          kind_of(value) == "object_creation_expression")
        emit(target, Relation::Typeof, *root_entity);
    }
    walk_node_skipping(value, root);
  }

  TSNode assign_root(TSNode expr) const {
    std::string kind = cst::node_kind(expr);
    if (kind == "parenthesized_expression" || kind == "cast_expression") {
      TSNode value = child_by_field(expr, "value");
      if (!ts_node_is_null(value)) return assign_root(value);
      auto inner = named_children(expr);
      return inner.empty() ? TSNode{} : assign_root(inner.back());
    }
    if (kind == "method_invocation") return expr;
    if (kind == "object_creation_expression") {
      TSNode type = child_by_field(expr, "type");
      return ts_node_is_null(type) ? TSNode{} : type;
    }
    if (kind == "identifier" || kind == "field_access") return expr;
    return TSNode{};
  }

  // Entity an assignment-like root points at.
  std::optional<size_t> value_entity(TSNode node) {
    std::string kind = kind_of(node);
    if (kind == "method_invocation") {
      TSNode object = child_by_field(node, "object");
      TSNode name = child_by_field(node, "name");
      if (ts_node_is_null(object)) {
        return ts_node_is_null(name) ? std::nullopt : chain_entity(name);
      }
      return invocation_entity(object, name);
    }
    if (kind == "identifier" || kind == "field_access" ||
        kind == "type_identifier" || kind == "scoped_type_identifier" ||
        kind == "scoped_identifier" || kind == "generic_type") {
      if (kind == "generic_type") {
        auto inner = named_children(node);
        return inner.empty() ? std::nullopt : value_entity(inner[0]);
      }
      return chain_entity(node);
    }
    return std::nullopt;
  }

  std::optional<size_t> type_entity(TSNode type) {
    std::string kind = kind_of(type);
    if (kind == "generic_type") {
      auto inner = named_children(type);
      if (inner.empty()) return std::nullopt;
      for (TSNode child : cst::children_of_kind(type, "type_arguments"))
        walk_node(child);
      return type_entity(inner[0]);
    }
    if (kind == "array_type") {
      TSNode element = child_by_field(type, "element");
      return ts_node_is_null(element) ? std::nullopt : type_entity(element);
    }
    if (kind == "type_identifier" || kind == "scoped_type_identifier")
      return chain_entity(type);
    return std::nullopt;
  }

  void type_link(TSNode type, size_t target) {
    if (auto entity = type_entity(type)) emit(target, Relation::Typeof, *entity);
  }

  // Pure dotted chain rooted at an identifier/type_identifier; import roots
  // spawn usage nodes.
  std::optional<size_t> chain_entity(TSNode expr) {
    std::vector<std::string> parts;
    TSNode cursor = expr;
    while (true) {
      std::string kind = kind_of(cursor);
      if (kind == "identifier" || kind == "type_identifier") {
        parts.push_back(text(cursor));
        break;
      }
      if (kind == "field_access") {
        TSNode field = child_by_field(cursor, "field");
        if (ts_node_is_null(field)) return std::nullopt;
        parts.push_back(text(field));
        cursor = child_by_field(cursor, "object");
      } else if (kind == "scoped_identifier" || kind == "scoped_type_identifier") {
        TSNode name = child_by_field(cursor, "name");
        if (ts_node_is_null(name)) {
          auto inner = named_children(cursor);
          if (inner.size() < 2) return std::nullopt;
          parts.push_back(text(inner[1]));
          cursor = inner[0];
          continue;
        }
        parts.push_back(text(name));
        TSNode scope = child_by_field(cursor, "scope");
        if (ts_node_is_null(scope)) {
          auto inner = named_children(cursor);
          if (inner.empty()) return std::nullopt;
          scope = inner[0];
        }
        cursor = scope;
      } else {
        return std::nullopt;  // this/super/call-rooted chains
      }
      if (ts_node_is_null(cursor)) return std::nullopt;
    }
    std::reverse(parts.begin(), parts.end());
    std::string root = parts[0];

    bool shadowed = false;
    auto root_node = resolve(root, &shadowed);
    if (!root_node) {
      if (!shadowed) record_unresolved(join_dotted(parts, 0, parts.size()), expr);
      return std::nullopt;
    }
    if (out_.nodes[*root_node].kind != NodeKind::Import) return root_node;
    if (parts.size() == 1) return root_node;  // bare imported name
    std::string written = join_dotted(parts, 0, parts.size());
    std::string file_module;
    std::string member;
    {
      const EntityNode& bound = out_.nodes[*root_node];
      std::vector<std::string> name_parts = split_dotted(bound.import_name);
      file_module = bound.import_module;
      if (!name_parts.empty() && name_parts[0] != "*" && !name_parts[0].empty())
        file_module += "." + name_parts[0];
      member = join_dotted(parts, 1, parts.size());
    }
    return usage_node(written, file_module, member, expr);
  }

  std::optional<size_t> invocation_entity(TSNode object, TSNode name) {
    // `obj.m(...)`: treat obj.m as a dotted chain when obj is pure
    std::optional<size_t> base = chain_entity(object);
    if (!base) return std::nullopt;
    if (out_.nodes[*base].kind != NodeKind::Import) return base;
    if (ts_node_is_null(name)) return base;
    std::string written = text(object) + "." + text(name);
    std::string file_module;
    std::string member;
    {
      const EntityNode& bound = out_.nodes[*base];
      if (bound.source_text.starts_with("import")) {
        // statement binding: file module = package + imported class
        std::vector<std::string> name_parts = split_dotted(bound.import_name);
        file_module = bound.import_module;
        if (!name_parts.empty() && name_parts[0] != "*")
          file_module += "." + name_parts[0];
        std::vector<std::string> parts = split_dotted(written);
        member = join_dotted(parts, 1, parts.size());
      } else {
        // base is itself a usage node; extend its member path
        file_module = bound.import_module;
        member = bound.import_name.empty() ? text(name)
                                           : bound.import_name + "." + text(name);
      }
    }
    return usage_node(written, file_module, member, object);
  }

  // Usage Import node, e.g. StringUtils.isEmpty written at a call site.
  // import_module = fully dotted file-level module (package + class),
  // import_name = member path inside that file.
  std::optional<size_t> usage_node(const std::string& written,
                                   const std::string& file_module,
                                   const std::string& member, TSNode expr) {
    auto hit = usage_registry_.find(written);
    if (hit != usage_registry_.end()) return hit->second;
    std::string qualified = member.empty() ? file_module : file_module + "." + member;
    size_t node = add_node(NodeKind::Import, written, qualified, span_of(expr),
                           written, "", file_module, member);
    usage_registry_.emplace(written, node);
    return node;
  }

  void walk_node_skipping(TSNode node, TSNode skip) {
    TSNode saved = skip_node_;
    skip_node_ = skip;
    walk_node(node);
    skip_node_ = saved;
  }

  TSNode skip_node_{};

  bool is_skipped(TSNode node) const {
    return !ts_node_is_null(skip_node_) && ts_node_eq(node, skip_node_);
  }

  void walk_node(TSNode node) {
    if (ts_node_is_null(node)) return;
    std::string kind = kind_of(node);

    if (kind == "local_variable_declaration") {
      walk_variable_declaration(node, /*register_locals=*/true);
      return;
    }
    if (kind == "assignment_expression") {
      TSNode left = child_by_field(node, "left");
      TSNode right = child_by_field(node, "right");
      std::optional<size_t> target;
      if (!ts_node_is_null(left)) {
        if (kind_of(left) == "identifier") {
          bool shadowed = false;
          target = resolve(text(left), &shadowed);
          if (!target && !shadowed) record_unresolved(text(left), left);
        } else {
          walk_node(left);
        }
      }
      if (!ts_node_is_null(right)) {
        if (target) assign_from(*target, right);
        else walk_node(right);
      }
      return;
    }
    if (kind == "method_invocation") {
      if (!is_skipped(node)) {
        TSNode object = child_by_field(node, "object");
        TSNode name = child_by_field(node, "name");
        if (ts_node_is_null(object)) {
          if (!ts_node_is_null(name)) {
            if (auto entity = chain_entity(name))
              emit(current_head(), Relation::Refers, *entity);
          }
        } else if (kind_of(object) == "identifier" ||
                   kind_of(object) == "field_access" ||
                   kind_of(object) == "scoped_identifier") {
          if (auto entity = invocation_entity(object, name))
            emit(current_head(), Relation::Refers, *entity);
        } else {
          walk_node(object);
        }
      }
      TSNode args = child_by_field(node, "arguments");
      if (!ts_node_is_null(args)) walk_node(args);
      return;
    }
    if (kind == "identifier" || kind == "type_identifier") {
      if (is_skipped(node)) return;
      if (auto entity = chain_entity(node))
        emit(current_head(), Relation::Refers, *entity);
      return;
    }
    if (kind == "field_access" || kind == "scoped_identifier" ||
        kind == "scoped_type_identifier") {
      if (is_skipped(node)) return;
      if (auto entity = chain_entity(node)) {
        emit(current_head(), Relation::Refers, *entity);
        return;
      }
      TSNode object = child_by_field(node, "object");
      if (!ts_node_is_null(object)) walk_node(object);
      return;
    }
    if (kind == "object_creation_expression") {
      TSNode type = child_by_field(node, "type");
      if (!ts_node_is_null(type) && !is_skipped(type)) {
        if (auto entity = type_entity(type))
          emit(current_head(), Relation::Refers, *entity);
      }
      TSNode args = child_by_field(node, "arguments");
      if (!ts_node_is_null(args)) walk_node(args);
      return;
    }
    if (kind == "enhanced_for_statement") {
      TSNode type = child_by_field(node, "type");
      TSNode name = child_by_field(node, "name");
      TSNode value = child_by_field(node, "value");
      std::optional<size_t> var;
      if (!ts_node_is_null(name)) {
        std::string var_name = text(name);
        if (!scopes_.back().bindings.count(var_name)) {
          size_t created = add_node(NodeKind::Variable, var_name,
                                    qual_for(var_name), span_of(node), first_line(node));
          bind(var_name, created);
          var = created;
        } else {
          var = resolve(var_name);
        }
      }
      if (var && !ts_node_is_null(type)) type_link(type, *var);
      if (!ts_node_is_null(value)) {
        if (var) {
          TSNode root = assign_root(value);
          std::optional<size_t> root_entity;
          if (!ts_node_is_null(root)) root_entity = value_entity(root);
          if (root_entity) emit(*var, Relation::Assign, *root_entity);
          walk_node_skipping(value, root);
        } else {
          walk_node(value);
        }
      }
      TSNode body = child_by_field(node, "body");
      if (!ts_node_is_null(body)) walk_node(body);
      return;
    }
    if (kind == "try_with_resources_statement") {
      TSNode resources = child_by_field(node, "resources");
      if (!ts_node_is_null(resources)) {
        for (TSNode resource : cst::children_of_kind(resources, "resource")) {
          TSNode type = child_by_field(resource, "type");
          TSNode name = child_by_field(resource, "name");
          TSNode value = child_by_field(resource, "value");
          std::optional<size_t> var;
          if (!ts_node_is_null(name)) {
            std::string var_name = text(name);
            size_t created = add_node(NodeKind::Variable, var_name,
                                      qual_for(var_name), span_of(resource),
                                      text(resource));
            bind(var_name, created);
            var = created;
          }
          if (var && !ts_node_is_null(type)) type_link(type, *var);
          if (!ts_node_is_null(value)) {
            if (var) {
              TSNode root = assign_root(value);
              std::optional<size_t> root_entity;
              if (!ts_node_is_null(root)) root_entity = value_entity(root);
              if (root_entity) emit(*var, Relation::As, *root_entity);
              walk_node_skipping(value, root);
            } else {
              walk_node(value);
            }
          }
        }
      }
      TSNode body = child_by_field(node, "body");
      if (!ts_node_is_null(body)) walk_node(body);
      for (TSNode child : named_children(node)) {
        std::string ck = kind_of(child);
        if (ck == "catch_clause" || ck == "finally_clause") walk_node(child);
      }
      return;
    }
    if (kind == "catch_clause") {
      for (TSNode param : cst::children_of_kind(node, "catch_formal_parameter")) {
        TSNode name{};
        TSNode catch_type{};
        for (TSNode child : named_children(param)) {
          std::string ck = kind_of(child);
          if (ck == "identifier") name = child;
          else if (ck == "catch_type") catch_type = child;
        }
        std::optional<size_t> var;
        if (!ts_node_is_null(name)) {
          std::string var_name = text(name);
          size_t created = add_node(NodeKind::Variable, var_name,
                                    qual_for(var_name), span_of(param), text(param));
          bind(var_name, created);
          var = created;
        }
        if (var && !ts_node_is_null(catch_type)) {
          for (TSNode type : named_children(catch_type)) {
            if (auto entity = type_entity(type)) emit(*var, Relation::As, *entity);
          }
        }
      }
      TSNode body = child_by_field(node, "body");
      if (!ts_node_is_null(body)) walk_node(body);
      return;
    }
    if (kind == "lambda_expression") {
      JvScope shadow{JvScope::Kind::Shadow, scopes_.back().qual, -1, {}, {}};
      TSNode params = child_by_field(node, "parameters");
      if (!ts_node_is_null(params)) {
        if (kind_of(params) == "identifier") {
          shadow.shadows.insert(text(params));
        } else {
          for (TSNode param : named_children(params)) {
            if (kind_of(param) == "identifier") {
              shadow.shadows.insert(text(param));
            } else {
              TSNode name = child_by_field(param, "name");
              if (!ts_node_is_null(name)) shadow.shadows.insert(text(name));
            }
          }
        }
      }
      scopes_.push_back(std::move(shadow));
      TSNode body = child_by_field(node, "body");
      if (!ts_node_is_null(body)) walk_node(body);
      scopes_.pop_back();
      return;
    }
    if (kind == "method_reference") {
      auto inner = named_children(node);
      if (!inner.empty()) walk_node(inner[0]);
      return;
    }
    if (kind == "cast_expression") {
      TSNode type = child_by_field(node, "type");
      if (!ts_node_is_null(type)) {
        if (auto entity = type_entity(type))
          emit(current_head(), Relation::Refers, *entity);
      }
      TSNode value = child_by_field(node, "value");
      if (!ts_node_is_null(value)) walk_node(value);
      return;
    }
    if (kind == "instanceof_expression") {
      TSNode left = child_by_field(node, "left");
      if (!ts_node_is_null(left)) walk_node(left);
      TSNode right = child_by_field(node, "right");
      if (!ts_node_is_null(right)) {
        if (auto entity = type_entity(right))
          emit(current_head(), Relation::Refers, *entity);
      }
      return;
    }
    if (kind == "modifiers") {
      walk_annotations(node);
      return;
    }
    if (kind == "string_literal" || kind == "line_comment" ||
        kind == "block_comment" || kind == "this" || kind == "super") {
      return;
    }
    for (TSNode child : named_children(node)) walk_node(child);
  }

  std::string first_line(TSNode node) const {
    std::string full = text(node);
    size_t nl = full.find('\n');
    return nl == std::string::npos ? full : full.substr(0, nl);
  }
};

}  // namespace

FileGraph build_file_graph_java(const cst::SourceTree& tree,
                                const std::string& rel_path) {
  return JvBuilder(tree, rel_path).run();
}

}  // namespace referee
