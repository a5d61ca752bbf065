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

std::string module_path_of(const std::string& rel_path) {
  std::string mod = rel_path;
  if (mod.size() > 3 && mod.ends_with(".py")) mod.resize(mod.size() - 3);
  std::replace(mod.begin(), mod.end(), '/', '.');
  if (mod.ends_with(".__init__")) mod.resize(mod.size() - 9);
  return mod;
}

std::string first_segment(const std::string& dotted) {
  size_t dot = dotted.find('.');
  return dot == std::string::npos ? dotted : dotted.substr(0, dot);
}

struct PyScope {
  enum class Kind { Module, Class, Function, Shadow };
  Kind kind = Kind::Module;
  std::string qual;  // prefix for children, "" at module level
  long entity = -1;  // owning node index, -1 for shadow scopes
  std::map<std::string, size_t> bindings;
  std::set<std::string> globals;
  std::set<std::string> shadows;
};

class PyBuilder {
 public:
  PyBuilder(const cst::SourceTree& tree, std::string rel_path)
      : tree_(tree), src_(tree.source()), file_(std::move(rel_path)),
        module_name_(module_path_of(file_)) {}

  FileGraph run() {
    TSNode root = tree_.root();
    size_t module = add_node(NodeKind::Module, module_name_, module_name_,
                             {0, static_cast<uint32_t>(src_.size())}, "",
                             docstring_of_block(root));
    scopes_.push_back({PyScope::Kind::Module, "", static_cast<long>(module), {}, {}, {}});
    hoist_block(root);
    walk_block(root);
    finish_ids();
    return std::move(out_);
  }

 private:
  const cst::SourceTree& tree_;
  const std::string& src_;
  std::string file_;
  std::string module_name_;
  FileGraph out_;
  std::vector<PyScope> scopes_;
  std::map<std::string, size_t> usage_registry_;
  std::set<std::tuple<size_t, Relation, size_t>> edge_seen_;
  std::vector<std::tuple<size_t, Relation, size_t>> edges_;

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
    scopes_.back().bindings.emplace(name, node);  // first binding wins
  }

  // Innermost-out lexical resolution; returns nullopt for shadowed names.
  std::optional<size_t> resolve(const std::string& name, bool* shadowed = nullptr) {
    bool force_module = false;
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (it->shadows.count(name)) {
        if (shadowed) *shadowed = true;
        return std::nullopt;
      }
      if (!force_module) {
        if (it->globals.count(name)) {
          force_module = true;
        } else {
          auto hit = it->bindings.find(name);
          if (hit != it->bindings.end()) return hit->second;
        }
      }
      // Class scopes are not visible from nested function scopes in Python,
      // but resolving through them is harmless for dependency purposes.
    }
    if (force_module && !scopes_.empty()) {
      auto hit = scopes_.front().bindings.find(name);
      if (hit != scopes_.front().bindings.end()) return hit->second;
    }
    return std::nullopt;
  }

  void record_unresolved(const std::string& name, TSNode node) {
    out_.unresolved.push_back({file_, name, span_of(node)});
  }

  std::string docstring_of_block(TSNode block) const {
    for (TSNode child : named_children(block)) {
      std::string kind = cst::node_kind(child);
      if (kind == "comment") continue;
      if (kind != "expression_statement") return "";
      auto inner = named_children(child);
      if (inner.size() == 1 && cst::node_kind(inner[0]) == "string")
        return string_value(inner[0]);
      return "";
    }
    return "";
  }

  std::string string_value(TSNode string_node) const {
    std::string value;
    for (TSNode child : named_children(string_node)) {
      if (cst::node_kind(child) == "string_content") value += text(child);
    }
    return value;
  }

  // ---- hoisting pass: register every binding of the current scope ----------

  void hoist_block(TSNode block) {
    for (TSNode stmt : named_children(block)) hoist_statement(stmt);
  }

  void hoist_statement(TSNode stmt) {
    std::string kind = kind_of(stmt);
    if (kind == "function_definition") {
      hoist_function(stmt);
    } else if (kind == "class_definition") {
      hoist_class(stmt);
    } else if (kind == "decorated_definition") {
      TSNode def = child_by_field(stmt, "definition");
      if (!ts_node_is_null(def)) hoist_statement(def);
    } else if (kind == "import_statement") {
      hoist_import(stmt);
    } else if (kind == "import_from_statement") {
      hoist_import_from(stmt);
    } else if (kind == "expression_statement") {
      for (TSNode expr : named_children(stmt)) {
        std::string ek = kind_of(expr);
        if (ek == "assignment") hoist_assignment_targets(expr, stmt);
        if (ek == "named_expression") hoist_named_expression(expr, stmt);
      }
    } else if (kind == "global_statement") {
      for (TSNode name : named_children(stmt))
        scopes_.back().globals.insert(text(name));
    } else if (kind == "for_statement") {
      TSNode left = child_by_field(stmt, "left");
      if (!ts_node_is_null(left)) hoist_pattern(left, stmt);
      hoist_statement_body(stmt);
    } else if (kind == "with_statement") {
      for (TSNode clause : cst::children_of_kind(stmt, "with_clause")) {
        for (TSNode item : cst::children_of_kind(clause, "with_item")) {
          TSNode value = child_by_field(item, "value");
          if (!ts_node_is_null(value) && kind_of(value) == "as_pattern") {
            TSNode alias = child_by_field(value, "alias");
            if (!ts_node_is_null(alias)) hoist_pattern(alias, stmt);
          }
        }
      }
      hoist_statement_body(stmt);
    } else if (kind == "try_statement") {
      hoist_statement_body(stmt);
      for (TSNode clause : cst::children_of_kind(stmt, "except_clause")) {
        for (TSNode child : named_children(clause)) {
          if (kind_of(child) == "as_pattern") {
            TSNode alias = child_by_field(child, "alias");
            if (!ts_node_is_null(alias)) hoist_pattern(alias, clause);
          }
        }
        hoist_statement_body(clause);
      }
    } else if (kind == "if_statement" || kind == "while_statement" ||
               kind == "elif_clause" || kind == "else_clause" ||
               kind == "finally_clause" || kind == "match_statement" ||
               kind == "case_clause") {
      hoist_statement_body(stmt);
      for (TSNode child : named_children(stmt)) {
        std::string ck = kind_of(child);
        if (ck == "elif_clause" || ck == "else_clause" || ck == "case_clause")
          hoist_statement(child);
      }
    }
  }

  void hoist_statement_body(TSNode stmt) {
    TSNode body = child_by_field(stmt, "body");
    if (!ts_node_is_null(body)) hoist_block(body);
    for (TSNode child : cst::children_of_kind(stmt, "block")) hoist_block(child);
  }

  void hoist_function(TSNode def) {
    TSNode name_node = child_by_field(def, "name");
    if (ts_node_is_null(name_node)) return;
    std::string name = text(name_node);
    TSNode outer = def;
    if (!ts_node_is_null(ts_node_parent(def)) &&
        cst::node_kind(ts_node_parent(def)) == "decorated_definition")
      outer = ts_node_parent(def);
    TSNode body = child_by_field(def, "body");
    std::string doc = ts_node_is_null(body) ? "" : docstring_of_block(body);
    size_t fn = add_node(NodeKind::Function, name, qual_for(name), span_of(outer),
                         text(outer), doc);
    bind(name, fn);
  }

  void hoist_class(TSNode def) {
    TSNode name_node = child_by_field(def, "name");
    if (ts_node_is_null(name_node)) return;
    std::string name = text(name_node);
    TSNode outer = def;
    if (!ts_node_is_null(ts_node_parent(def)) &&
        cst::node_kind(ts_node_parent(def)) == "decorated_definition")
      outer = ts_node_parent(def);
    TSNode body = child_by_field(def, "body");
    std::string doc = ts_node_is_null(body) ? "" : docstring_of_block(body);
    size_t cls = add_node(NodeKind::Class, name, qual_for(name), span_of(outer),
                          text(outer), doc);
    bind(name, cls);
  }

  void hoist_import(TSNode stmt) {
    std::string stmt_text = text(stmt);
    ByteSpan stmt_span = span_of(stmt);
    for (TSNode child : named_children(stmt)) {
      std::string kind = kind_of(child);
      if (kind == "dotted_name") {
        std::string module = text(child);
        size_t node = add_node(NodeKind::Import, module, module, stmt_span,
                               stmt_text, "", module, "");
        bind(first_segment(module), node);
      } else if (kind == "aliased_import") {
        TSNode name = child_by_field(child, "name");
        TSNode alias = child_by_field(child, "alias");
        if (ts_node_is_null(name) || ts_node_is_null(alias)) continue;
        std::string module = text(name);
        std::string bound = text(alias);
        size_t node = add_node(NodeKind::Import, bound, module, stmt_span,
                               stmt_text, "", module, "");
        bind(bound, node);
      }
    }
  }

  std::string resolve_relative_module(const std::string& spec) const {
    size_t dots = 0;
    while (dots < spec.size() && spec[dots] == '.') ++dots;
    std::string rest = spec.substr(dots);
    std::vector<std::string> parts;
    size_t pos = 0;
    while (pos < module_name_.size()) {
      size_t dot = module_name_.find('.', pos);
      if (dot == std::string::npos) dot = module_name_.size();
      parts.push_back(module_name_.substr(pos, dot - pos));
      pos = dot + 1;
    }
    // one dot = current package (drop the file segment), each extra dot one up
    for (size_t i = 0; i < dots && !parts.empty(); ++i) parts.pop_back();
    std::string base;
    for (auto& part : parts) {
      if (!base.empty()) base += ".";
      base += part;
    }
    if (rest.empty()) return base;
    return base.empty() ? rest : base + "." + rest;
  }

  void hoist_import_from(TSNode stmt) {
    std::string stmt_text = text(stmt);
    ByteSpan stmt_span = span_of(stmt);
    TSNode module_node = child_by_field(stmt, "module_name");
    if (ts_node_is_null(module_node)) return;
    std::string module = kind_of(module_node) == "relative_import"
                             ? resolve_relative_module(text(module_node))
                             : text(module_node);
    for (TSNode child : named_children(stmt)) {
      if (ts_node_eq(child, module_node)) continue;
      std::string kind = kind_of(child);
      if (kind == "dotted_name") {
        std::string name = text(child);
        size_t node = add_node(NodeKind::Import, name, module + "." + name,
                               stmt_span, stmt_text, "", module, name);
        bind(name, node);
      } else if (kind == "aliased_import") {
        TSNode name = child_by_field(child, "name");
        TSNode alias = child_by_field(child, "alias");
        if (ts_node_is_null(name) || ts_node_is_null(alias)) continue;
        std::string imported = text(name);
        std::string bound = text(alias);
        size_t node = add_node(NodeKind::Import, bound, module + "." + imported,
                               stmt_span, stmt_text, "", module, imported);
        bind(bound, node);
      } else if (kind == "wildcard_import") {
        add_node(NodeKind::Import, "*", module + ".*", stmt_span, stmt_text, "",
                 module, "*");
      }
    }
  }

  void hoist_named_expression(TSNode expr, TSNode stmt) {
    TSNode name = child_by_field(expr, "name");
    if (!ts_node_is_null(name) && kind_of(name) == "identifier")
      hoist_target_identifier(name, stmt);
  }

  void hoist_assignment_targets(TSNode assign, TSNode stmt) {
    TSNode left = child_by_field(assign, "left");
    if (!ts_node_is_null(left)) hoist_pattern(left, stmt);
    TSNode right = child_by_field(assign, "right");
    if (!ts_node_is_null(right) && kind_of(right) == "assignment")
      hoist_assignment_targets(right, stmt);
  }

  void hoist_pattern(TSNode pattern, TSNode stmt) {
    std::string kind = kind_of(pattern);
    if (kind == "identifier") {
      hoist_target_identifier(pattern, stmt);
    } else if (kind == "pattern_list" || kind == "tuple_pattern" ||
               kind == "list_pattern" || kind == "as_pattern_target") {
      for (TSNode child : named_children(pattern)) hoist_pattern(child, stmt);
    } else if (kind == "list_splat_pattern") {
      for (TSNode child : named_children(pattern)) hoist_pattern(child, stmt);
    }
    // attribute/subscript targets mutate existing entities: no new binding
  }

  void hoist_target_identifier(TSNode ident, TSNode stmt) {
    std::string name = text(ident);
    if (scopes_.back().globals.count(name)) return;
    if (scopes_.back().bindings.count(name)) return;
    size_t node = add_node(NodeKind::Variable, name, qual_for(name),
                           span_of(stmt), text(stmt));
    bind(name, node);
  }

  // ---- edge pass ------------------------------------------------------------

  void walk_block(TSNode block) {
    for (TSNode stmt : named_children(block)) walk_statement(stmt);
  }

  void walk_statement(TSNode stmt) {
    std::string kind = kind_of(stmt);
    if (kind == "function_definition") {
      walk_function(stmt, {});
    } else if (kind == "class_definition") {
      walk_class(stmt, {});
    } else if (kind == "decorated_definition") {
      TSNode def = child_by_field(stmt, "definition");
      if (ts_node_is_null(def)) return;
      std::vector<TSNode> decorators = cst::children_of_kind(stmt, "decorator");
      if (kind_of(def) == "function_definition") walk_function(def, decorators);
      else if (kind_of(def) == "class_definition") walk_class(def, decorators);
    } else if (kind == "expression_statement") {
      for (TSNode expr : named_children(stmt)) {
        std::string ek = kind_of(expr);
        if (ek == "assignment") walk_assignment(expr);
        else if (ek == "augmented_assignment") walk_augmented(expr);
        else walk_expr(expr);
      }
    } else if (kind == "for_statement") {
      walk_for(stmt);
    } else if (kind == "with_statement") {
      walk_with(stmt);
    } else if (kind == "try_statement") {
      walk_try(stmt);
    } else if (kind == "import_statement" || kind == "import_from_statement" ||
               kind == "global_statement" || kind == "nonlocal_statement" ||
               kind == "pass_statement" || kind == "break_statement" ||
               kind == "continue_statement" || kind == "comment") {
      // no edges
    } else if (kind == "return_statement" || kind == "delete_statement" ||
               kind == "raise_statement" || kind == "assert_statement" ||
               kind == "print_statement" || kind == "exec_statement" ||
               kind == "expression_list") {
      for (TSNode child : named_children(stmt)) walk_expr(child);
    } else if (kind == "if_statement" || kind == "while_statement" ||
               kind == "elif_clause" || kind == "else_clause" ||
               kind == "finally_clause" || kind == "match_statement" ||
               kind == "case_clause") {
      TSNode cond = child_by_field(stmt, "condition");
      if (!ts_node_is_null(cond)) walk_expr(cond);
      TSNode subject = child_by_field(stmt, "subject");
      if (!ts_node_is_null(subject)) walk_expr(subject);
      walk_statement_body(stmt);
      for (TSNode child : named_children(stmt)) {
        std::string ck = kind_of(child);
        if (ck == "elif_clause" || ck == "else_clause" || ck == "case_clause")
          walk_statement(child);
      }
    } else {
      for (TSNode child : named_children(stmt)) walk_expr(child);
    }
  }

  void walk_statement_body(TSNode stmt) {
    TSNode body = child_by_field(stmt, "body");
    if (!ts_node_is_null(body)) walk_block(body);
    for (TSNode child : cst::children_of_kind(stmt, "block")) walk_block(child);
  }

  void walk_function(TSNode def, const std::vector<TSNode>& decorators) {
    TSNode name_node = child_by_field(def, "name");
    if (ts_node_is_null(name_node)) return;
    auto binding = resolve(text(name_node));
    if (!binding) return;
    size_t fn = *binding;

    for (TSNode dec : decorators) {
      for (TSNode child : named_children(dec)) ref_expr_for(child, fn);
    }

    std::string fn_qual = out_.nodes[fn].qualified_name;
    scopes_.push_back({PyScope::Kind::Function, fn_qual, static_cast<long>(fn),
                       {}, {}, {}});
    TSNode params = child_by_field(def, "parameters");
    if (!ts_node_is_null(params)) walk_parameters(params, fn_qual);
    TSNode ret = child_by_field(def, "return_type");
    if (!ts_node_is_null(ret)) type_link(ret, fn);
    TSNode body = child_by_field(def, "body");
    if (!ts_node_is_null(body)) {
      hoist_block(body);
      walk_block(body);
    }
    scopes_.pop_back();
  }

  void walk_parameters(TSNode params, const std::string& fn_qual) {
    for (TSNode param : named_children(params)) {
      std::string kind = kind_of(param);
      TSNode ident{};
      TSNode type_node{};
      TSNode default_value{};
      if (kind == "identifier") {
        ident = param;
      } else if (kind == "typed_parameter") {
        auto inner = named_children(param);
        if (!inner.empty() && kind_of(inner[0]) == "identifier") ident = inner[0];
        type_node = child_by_field(param, "type");
      } else if (kind == "default_parameter" || kind == "typed_default_parameter") {
        TSNode name = child_by_field(param, "name");
        if (!ts_node_is_null(name) && kind_of(name) == "identifier") ident = name;
        type_node = child_by_field(param, "type");
        default_value = child_by_field(param, "value");
      } else if (kind == "list_splat_pattern" || kind == "dictionary_splat_pattern") {
        auto inner = named_children(param);
        if (!inner.empty() && kind_of(inner[0]) == "identifier") ident = inner[0];
      } else {
        continue;
      }
      if (ts_node_is_null(ident)) continue;
      std::string name = text(ident);
      std::string qual = fn_qual.empty() ? name : fn_qual + "." + name;
      size_t node = add_node(NodeKind::Parameter, name, qual, span_of(param),
                             text(param));
      bind(name, node);
      if (!ts_node_is_null(type_node)) type_link(type_node, node);
      if (!ts_node_is_null(default_value)) walk_expr(default_value);
    }
  }

  void walk_class(TSNode def, const std::vector<TSNode>& decorators) {
    TSNode name_node = child_by_field(def, "name");
    if (ts_node_is_null(name_node)) return;
    auto binding = resolve(text(name_node));
    if (!binding) return;
    size_t cls = *binding;

    for (TSNode dec : decorators) {
      for (TSNode child : named_children(dec)) ref_expr_for(child, cls);
    }
    TSNode supers = child_by_field(def, "superclasses");
    if (!ts_node_is_null(supers)) {
      for (TSNode base : named_children(supers)) {
        std::string bk = kind_of(base);
        if (bk == "identifier" || bk == "attribute") {
          if (auto target = chain_entity(base)) emit(cls, Relation::Inherits, *target);
        } else if (bk == "keyword_argument") {
          TSNode value = child_by_field(base, "value");
          if (!ts_node_is_null(value)) ref_expr_for(value, cls);
        } else {
          ref_expr_for(base, cls);
        }
      }
    }
    std::string cls_qual = out_.nodes[cls].qualified_name;
    scopes_.push_back({PyScope::Kind::Class, cls_qual, static_cast<long>(cls),
                       {}, {}, {}});
    TSNode body = child_by_field(def, "body");
    if (!ts_node_is_null(body)) {
      hoist_block(body);
      walk_block(body);
    }
    scopes_.pop_back();
  }

  void walk_assignment(TSNode assign) {
    TSNode left = child_by_field(assign, "left");
    TSNode type_node = child_by_field(assign, "type");
    TSNode right = child_by_field(assign, "right");

    std::vector<size_t> targets;
    if (!ts_node_is_null(left)) collect_targets(left, targets);

    if (!ts_node_is_null(type_node)) {
      for (size_t target : targets) type_link(type_node, target);
      if (targets.empty()) walk_expr(type_node);
    }
    if (ts_node_is_null(right)) return;
    if (kind_of(right) == "assignment") {  // a = b = expr chains
      walk_assignment(right);
      TSNode inner_left = child_by_field(right, "left");
      if (!ts_node_is_null(inner_left)) {
        // bind outer targets to the same RHS root as the inner assignment
        TSNode inner_right = child_by_field(right, "right");
        bind_assign_edges(targets, inner_right);
      }
      return;
    }
    bind_assign_edges(targets, right);
  }

  void bind_assign_edges(const std::vector<size_t>& targets, TSNode right) {
    if (ts_node_is_null(right)) return;
    TSNode root = assign_root(right);
    std::optional<size_t> root_entity;
    if (!ts_node_is_null(root)) root_entity = chain_entity(root);
    if (root_entity) {
      for (size_t target : targets) {
        emit(target, Relation::Assign, *root_entity);
        if (out_.nodes[*root_entity].kind == NodeKind::Class &&
            kind_of(right) == "call")
          emit(target, Relation::Typeof, *root_entity);
      }
    }
    walk_expr_skipping(right, root);
  }

  void walk_augmented(TSNode assign) {
    TSNode left = child_by_field(assign, "left");
    TSNode right = child_by_field(assign, "right");
    std::vector<size_t> targets;
    if (!ts_node_is_null(left)) collect_targets(left, targets);
    if (!ts_node_is_null(right)) bind_assign_edges(targets, right);
  }

  // Resolves assignment/as targets to their variable nodes; non-identifier
  // targets (attributes, subscripts) contribute plain references instead.
  void collect_targets(TSNode pattern, std::vector<size_t>& out) {
    std::string kind = kind_of(pattern);
    if (kind == "identifier") {
      if (auto node = resolve(text(pattern))) out.push_back(*node);
      else record_unresolved(text(pattern), pattern);
    } else if (kind == "pattern_list" || kind == "tuple_pattern" ||
               kind == "list_pattern" || kind == "expression_list" ||
               kind == "as_pattern_target" || kind == "list_splat_pattern") {
      for (TSNode child : named_children(pattern)) collect_targets(child, out);
    } else {
      walk_expr(pattern);
    }
  }

  void walk_for(TSNode stmt) {
    TSNode left = child_by_field(stmt, "left");
    TSNode right = child_by_field(stmt, "right");
    std::vector<size_t> targets;
    if (!ts_node_is_null(left)) collect_targets(left, targets);
    if (!ts_node_is_null(right)) bind_assign_edges(targets, right);
    walk_statement_body(stmt);
    for (TSNode child : named_children(stmt)) {
      if (kind_of(child) == "else_clause") walk_statement(child);
    }
  }

  void walk_with(TSNode stmt) {
    for (TSNode clause : cst::children_of_kind(stmt, "with_clause")) {
      for (TSNode item : cst::children_of_kind(clause, "with_item")) {
        TSNode value = child_by_field(item, "value");
        if (ts_node_is_null(value)) continue;
        if (kind_of(value) == "as_pattern") {
          TSNode expr = ts_node_named_child(value, 0);
          TSNode alias = child_by_field(value, "alias");
          std::vector<size_t> targets;
          if (!ts_node_is_null(alias)) collect_targets(alias, targets);
          if (!ts_node_is_null(expr)) {
            TSNode root = assign_root(expr);
            std::optional<size_t> root_entity;
            if (!ts_node_is_null(root)) root_entity = chain_entity(root);
            if (root_entity) {
              for (size_t target : targets) emit(target, Relation::As, *root_entity);
            }
            walk_expr_skipping(expr, root);
          }
        } else {
          walk_expr(value);
        }
      }
    }
    walk_statement_body(stmt);
  }

  void walk_try(TSNode stmt) {
    walk_statement_body(stmt);
    for (TSNode clause : named_children(stmt)) {
      std::string ck = kind_of(clause);
      if (ck == "except_clause" || ck == "except_group_clause") {
        for (TSNode child : named_children(clause)) {
          std::string kk = kind_of(child);
          if (kk == "as_pattern") {
            TSNode expr = ts_node_named_child(child, 0);
            TSNode alias = child_by_field(child, "alias");
            std::vector<size_t> targets;
            if (!ts_node_is_null(alias)) collect_targets(alias, targets);
            if (!ts_node_is_null(expr)) {
              if (auto entity = chain_entity(expr)) {
                for (size_t target : targets) emit(target, Relation::As, *entity);
              }
            }
          } else if (kk == "block") {
            walk_block(child);
          } else {
            walk_expr(child);
          }
        }
      } else if (ck == "else_clause" || ck == "finally_clause") {
        walk_statement(clause);
      }
    }
  }

  // Typeof link from an annotation; deeper names become plain references.
  void type_link(TSNode type_node, size_t target) {
    TSNode expr = type_node;
    if (kind_of(expr) == "type") {
      auto inner = named_children(expr);
      if (inner.empty()) return;
      expr = inner[0];
    }
    std::string kind = kind_of(expr);
    if (kind == "identifier" || kind == "attribute") {
      if (auto entity = chain_entity(expr)) emit(target, Relation::Typeof, *entity);
      return;
    }
    if (kind == "subscript") {
      TSNode value = child_by_field(expr, "value");
      if (!ts_node_is_null(value) &&
          (kind_of(value) == "identifier" || kind_of(value) == "attribute")) {
        if (auto entity = chain_entity(value)) emit(target, Relation::Typeof, *entity);
      }
      TSNode subscript = child_by_field(expr, "subscript");
      if (!ts_node_is_null(subscript)) walk_expr(subscript);
      return;
    }
    walk_expr(expr);
  }

  // The expression whose entity an Assign/As edge points at.
  TSNode assign_root(TSNode expr) const {
    std::string kind = cst::node_kind(expr);
    if (kind == "parenthesized_expression" || kind == "await") {
      auto inner = named_children(expr);
      return inner.empty() ? TSNode{} : assign_root(inner[0]);
    }
    if (kind == "call") {
      TSNode fn = child_by_field(expr, "function");
      return ts_node_is_null(fn) ? TSNode{} : assign_root(fn);
    }
    if (kind == "identifier" || kind == "attribute") return expr;
    return TSNode{};
  }

  // Entity for an identifier or pure attribute chain; creates import usage
  // nodes on demand. Records unresolved roots.
  std::optional<size_t> chain_entity(TSNode expr) {
    std::string kind = kind_of(expr);
    if (kind == "identifier") {
      std::string name = text(expr);
      bool shadowed = false;
      auto node = resolve(name, &shadowed);
      if (!node && !shadowed) record_unresolved(name, expr);
      return node;
    }
    if (kind != "attribute") return std::nullopt;
    std::vector<std::string> parts;
    TSNode cursor = expr;
    while (kind_of(cursor) == "attribute") {
      TSNode attr = child_by_field(cursor, "attribute");
      if (ts_node_is_null(attr)) return std::nullopt;
      parts.push_back(text(attr));
      cursor = child_by_field(cursor, "object");
      if (ts_node_is_null(cursor)) return std::nullopt;
    }
    if (kind_of(cursor) != "identifier") return std::nullopt;  // impure chain
    std::string root = text(cursor);
    parts.push_back(root);
    std::reverse(parts.begin(), parts.end());

    bool shadowed = false;
    auto root_node = resolve(root, &shadowed);
    if (!root_node) {
      if (!shadowed) {
        std::string dotted;
        for (auto& part : parts) {
          if (!dotted.empty()) dotted += ".";
          dotted += part;
        }
        record_unresolved(dotted, expr);
      }
      return std::nullopt;
    }
    const EntityNode& bound = out_.nodes[*root_node];
    if (bound.kind != NodeKind::Import) return root_node;
    return usage_node(bound, *root_node, parts, expr);
  }

  // Derived Import node for a dotted use of an imported binding, e.g.
  // urllib.parse.urlsplit or np.zeros. Canonical module/member metadata is
  // taken from the binding so the selector can resolve it.
  std::optional<size_t> usage_node(const EntityNode& binding, size_t binding_index,
                                   const std::vector<std::string>& parts,
                                   TSNode expr) {
    std::string written;
    for (auto& part : parts) {
      if (!written.empty()) written += ".";
      written += part;
    }
    auto hit = usage_registry_.find(written);
    if (hit != usage_registry_.end()) return hit->second;

    std::string member;
    for (size_t i = 1; i < parts.size(); ++i) {
      if (!member.empty()) member += ".";
      member += parts[i];
    }
    std::string module = binding.import_module;
    std::string canonical_member;
    if (binding.import_name.empty()) {
      // module import: member path is relative to the bound module
      std::string canonical = module.empty() ? written : module;
      if (!member.empty()) {
        // the written root may be an alias; rebuild against the real module
        canonical_member = member;
        std::string prefix = first_segment(module);
        if (parts[0] == prefix && module != prefix) {
          // import urllib.parse; urllib.parse.urlsplit -> member "urlsplit"
          std::string full = written;
          if (full.size() > module.size() && full.compare(0, module.size(), module) == 0 &&
              full[module.size()] == '.') {
            canonical_member = full.substr(module.size() + 1);
          } else {
            module = prefix;
            canonical_member = member;
          }
        }
      }
    } else {
      // from-import binding: member is relative to the imported name
      canonical_member = binding.import_name;
      if (!member.empty()) canonical_member += "." + member;
    }
    std::string qualified =
        canonical_member.empty() ? module : module + "." + canonical_member;
    if (member.empty()) return binding_index;  // bare alias use

    size_t node = add_node(NodeKind::Import, written, qualified, span_of(expr),
                           written, "", module, canonical_member);
    usage_registry_.emplace(written, node);
    return node;
  }

  void ref_expr_for(TSNode expr, size_t head) {
    size_t saved = forced_head_;
    forced_head_ = head + 1;
    walk_expr(expr);
    forced_head_ = saved;
  }

  size_t forced_head_ = 0;  // head override + 1, 0 = none

  size_t effective_head() const {
    return forced_head_ ? forced_head_ - 1 : current_head();
  }

  void walk_expr_skipping(TSNode expr, TSNode skip) {
    skip_node_ = skip;
    walk_expr(expr);
    skip_node_ = TSNode{};
  }

  TSNode skip_node_{};

  bool is_skipped(TSNode node) const {
    return !ts_node_is_null(skip_node_) && ts_node_eq(node, skip_node_);
  }

  void walk_expr(TSNode expr) {
    if (ts_node_is_null(expr)) return;
    std::string kind = kind_of(expr);
    if (kind == "identifier") {
      if (is_skipped(expr)) return;
      if (auto entity = chain_entity(expr))
        emit(effective_head(), Relation::Refers, *entity);
      return;
    }
    if (kind == "attribute") {
      if (is_skipped(expr)) return;
      TSNode probe = expr;
      bool pure = true;
      while (kind_of(probe) == "attribute") {
        probe = child_by_field(probe, "object");
        if (ts_node_is_null(probe)) return;
      }
      pure = kind_of(probe) == "identifier";
      if (pure) {
        if (auto entity = chain_entity(expr))
          emit(effective_head(), Relation::Refers, *entity);
        return;
      }
      TSNode object = child_by_field(expr, "object");
      if (!ts_node_is_null(object)) walk_expr(object);
      return;
    }
    if (kind == "call") {
      TSNode fn = child_by_field(expr, "function");
      if (!ts_node_is_null(fn) && !is_skipped(fn)) walk_expr(fn);
      TSNode args = child_by_field(expr, "arguments");
      if (!ts_node_is_null(args)) walk_expr(args);
      return;
    }
    if (kind == "keyword_argument") {
      TSNode value = child_by_field(expr, "value");
      if (!ts_node_is_null(value)) walk_expr(value);
      return;
    }
    if (kind == "lambda") {
      PyScope shadow{PyScope::Kind::Shadow, scopes_.back().qual, -1, {}, {}, {}};
      TSNode params = child_by_field(expr, "parameters");
      if (!ts_node_is_null(params)) {
        for (TSNode param : named_children(params)) {
          TSNode ident = param;
          if (kind_of(param) == "default_parameter")
            ident = child_by_field(param, "name");
          else if (kind_of(param) != "identifier") {
            auto inner = named_children(param);
            if (!inner.empty()) ident = inner[0];
          }
          if (!ts_node_is_null(ident) && kind_of(ident) == "identifier")
            shadow.shadows.insert(text(ident));
        }
      }
      scopes_.push_back(std::move(shadow));
      TSNode body = child_by_field(expr, "body");
      if (!ts_node_is_null(body)) walk_expr(body);
      scopes_.pop_back();
      return;
    }
    if (kind == "list_comprehension" || kind == "set_comprehension" ||
        kind == "dictionary_comprehension" || kind == "generator_expression") {
      PyScope shadow{PyScope::Kind::Shadow, scopes_.back().qual, -1, {}, {}, {}};
      for (TSNode clause : cst::children_of_kind(expr, "for_in_clause")) {
        TSNode left = child_by_field(clause, "left");
        collect_shadow_names(left, shadow.shadows);
      }
      scopes_.push_back(std::move(shadow));
      for (TSNode child : named_children(expr)) {
        if (kind_of(child) == "for_in_clause") {
          TSNode right = child_by_field(child, "right");
          if (!ts_node_is_null(right)) walk_expr(right);
        } else {
          walk_expr(child);
        }
      }
      scopes_.pop_back();
      return;
    }
    if (kind == "string") return;
    for (TSNode child : named_children(expr)) walk_expr(child);
  }

  void collect_shadow_names(TSNode pattern, std::set<std::string>& out) {
    if (ts_node_is_null(pattern)) return;
    if (kind_of(pattern) == "identifier") {
      out.insert(text(pattern));
      return;
    }
    for (TSNode child : named_children(pattern)) collect_shadow_names(child, out);
  }
};

}  // namespace

FileGraph build_file_graph_python(const cst::SourceTree& tree,
                                  const std::string& rel_path) {
  return PyBuilder(tree, rel_path).run();
}

}  // namespace referee
