// Copyright (c) 2026 valsched Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Text format, one declaration per line, '#' starts a comment:
//
//   pipeline <name>
//   buffer <name> dims <e1>x<e2>... elem <bytes>
//   stage <name> dims <d>:<extent>,... [reduce <d>:<extent>,...] flops <k> [elem <bytes>] [output]
//     in <producer> map (<dimref>|_)*<stride>+<window>, ...
//
// Whitespace around commas is ignored. `in` lines attach to the stage above.

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "valsched/error.h"
#include "valsched/pipeline.h"

namespace valsched {
namespace {

struct Token {
  std::string text;
  int column = 1;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> raw;
  size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != '#') ++j;
    raw.push_back({std::string(line.substr(i, j - i)), static_cast<int>(i) + 1});
    i = j;
  }
  // Glue comma-separated lists written with spaces back into one token.
  std::vector<Token> out;
  for (auto& t : raw) {
    if (!out.empty() && (out.back().text.back() == ',' || t.text.front() == ',')) {
      out.back().text += t.text;
    } else {
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

class LineParser {
 public:
  LineParser(int line, std::vector<Token> tokens) : line_(line), tokens_(std::move(tokens)) {}

  bool done() const { return pos_ >= tokens_.size(); }
  const Token& peek() const { return tokens_[pos_]; }

  [[noreturn]] void fail(const std::string& message) const {
    int col = pos_ < tokens_.size() ? tokens_[pos_].column
                                    : (tokens_.empty() ? 1 : tokens_.back().column);
    throw ParseError(line_, col, message);
  }

  const Token& next(const char* what) {
    if (done()) fail(std::string("expected ") + what);
    return tokens_[pos_++];
  }

  void expect(std::string_view keyword) {
    if (done() || peek().text != keyword) fail("expected '" + std::string(keyword) + "'");
    ++pos_;
  }

  bool accept(std::string_view keyword) {
    if (!done() && peek().text == keyword) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string identifier(const char* what) {
    const Token& t = next(what);
    if (!is_identifier(t.text)) {
      --pos_;
      fail(std::string("expected ") + what + ", got '" + t.text + "'");
    }
    return t.text;
  }

  int64_t integer(std::string_view text, const char* what) const {
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
      fail(std::string("expected ") + what + ", got '" + std::string(text) + "'");
    }
    return v;
  }

  int64_t integer_token(const char* what) {
    const Token& t = next(what);
    --pos_;
    int64_t v = integer(t.text, what);
    ++pos_;
    return v;
  }

  std::vector<Dim> dim_list() {
    const Token& t = next("dim list");
    --pos_;
    std::vector<Dim> dims;
    for (auto part : split(t.text, ',')) {
      auto colon = part.find(':');
      if (colon == std::string_view::npos) fail("expected <dim>:<extent>, got '" + std::string(part) + "'");
      std::string name(part.substr(0, colon));
      if (!is_identifier(name)) fail("bad dim name '" + name + "'");
      dims.push_back({name, integer(part.substr(colon + 1), "dim extent")});
    }
    ++pos_;
    return dims;
  }

  int line() const { return line_; }

 private:
  int line_;
  std::vector<Token> tokens_;
  size_t pos_ = 0;
};

struct PendingRef {
  int line;
  int column;
  std::string producer;
};

}  // namespace

Pipeline parse_pipeline(std::string_view text) {
  Pipeline p;
  bool have_header = false;
  std::map<std::string, int> declared_at;
  std::vector<PendingRef> refs;

  auto declare = [&](LineParser& lp, const std::string& name) {
    auto [it, inserted] = declared_at.emplace(name, lp.line());
    if (!inserted) {
      lp.fail("duplicate name '" + name + "' (first declared on line " + std::to_string(it->second) + ")");
    }
  };

  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    LineParser lp(line_no, tokenize(line));
    if (lp.done()) {
      if (end == text.size()) break;
      continue;
    }
    const Token& kw = lp.next("keyword");
    if (kw.text == "pipeline") {
      if (have_header) throw ParseError(line_no, kw.column, "second 'pipeline' header");
      p.name = lp.identifier("pipeline name");
      have_header = true;
    } else if (!have_header) {
      throw ParseError(line_no, kw.column, "expected 'pipeline <name>' before '" + kw.text + "'");
    } else if (kw.text == "buffer") {
      ExternalBuffer b;
      b.name = lp.identifier("buffer name");
      declare(lp, b.name);
      lp.expect("dims");
      const Token& dims = lp.next("buffer extents");
      for (auto part : split(dims.text, 'x')) b.dims.push_back(lp.integer(part, "buffer extent"));
      lp.expect("elem");
      b.element_size = lp.integer_token("element size");
      p.buffers.push_back(std::move(b));
    } else if (kw.text == "stage") {
      Stage s;
      s.name = lp.identifier("stage name");
      declare(lp, s.name);
      lp.expect("dims");
      s.dims = lp.dim_list();
      if (lp.accept("reduce")) s.reduction_dims = lp.dim_list();
      lp.expect("flops");
      s.flops_per_point = lp.integer_token("flop count");
      if (lp.accept("elem")) s.element_size = lp.integer_token("element size");
      if (lp.accept("output")) s.output = true;
      p.stages.push_back(std::move(s));
    } else if (kw.text == "in") {
      if (p.stages.empty()) throw ParseError(line_no, kw.column, "'in' before any stage");
      Stage& s = p.stages.back();
      InputEdge edge;
      const Token& prod = lp.peek();
      edge.producer = lp.identifier("producer name");
      refs.push_back({line_no, prod.column, edge.producer});
      lp.expect("map");
      const Token& maps = lp.next("access maps");
      for (auto part : split(maps.text, ',')) {
        auto star = part.find('*');
        auto plus = part.find('+');
        if (star == std::string_view::npos || plus == std::string_view::npos || plus < star) {
          throw ParseError(line_no, maps.column,
                           "expected (<dim>|_)*<stride>+<window>, got '" + std::string(part) + "'");
        }
        AccessMap m;
        std::string dimref(part.substr(0, star));
        if (dimref != "_") {
          auto d = s.find_iteration_dim(dimref);
          if (!d) {
            throw ParseError(line_no, maps.column,
                             "stage '" + s.name + "' has no dim '" + dimref + "'");
          }
          m.consumer_dim = *d;
        }
        m.stride = lp.integer(part.substr(star + 1, plus - star - 1), "stride");
        m.window = lp.integer(part.substr(plus + 1), "window");
        edge.access.push_back(m);
      }
      s.inputs.push_back(std::move(edge));
    } else {
      throw ParseError(line_no, kw.column, "unknown keyword '" + kw.text + "'");
    }
    if (!lp.done()) lp.fail("unexpected token '" + lp.peek().text + "'");
    if (end == text.size()) break;
  }
  if (!have_header) throw ParseError(1, 1, "missing 'pipeline <name>' header");
  for (const auto& r : refs) {
    if (!declared_at.count(r.producer)) {
      throw ParseError(r.line, r.column, "unknown reference '" + r.producer + "'");
    }
  }
  return p;
}

Pipeline load_pipeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open pipeline file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pipeline(ss.str());
}

std::string serialize_pipeline(const Pipeline& p) {
  std::ostringstream os;
  os << "pipeline " << p.name << "\n";
  for (const auto& b : p.buffers) {
    os << "buffer " << b.name << " dims ";
    for (size_t i = 0; i < b.dims.size(); ++i) os << (i ? "x" : "") << b.dims[i];
    os << " elem " << b.element_size << "\n";
  }
  auto dims = [&](const std::vector<Dim>& ds) {
    for (size_t i = 0; i < ds.size(); ++i) os << (i ? "," : "") << ds[i].name << ":" << ds[i].extent;
  };
  for (const auto& s : p.stages) {
    os << "stage " << s.name << " dims ";
    dims(s.dims);
    if (!s.reduction_dims.empty()) {
      os << " reduce ";
      dims(s.reduction_dims);
    }
    os << " flops " << s.flops_per_point;
    if (s.element_size != 4) os << " elem " << s.element_size;
    if (s.output) os << " output";
    os << "\n";
    for (const auto& e : s.inputs) {
      os << "  in " << e.producer << " map ";
      for (size_t i = 0; i < e.access.size(); ++i) {
        const AccessMap& m = e.access[i];
        os << (i ? "," : "") << (m.consumer_dim ? s.iteration_dim(*m.consumer_dim).name : "_") << "*"
           << m.stride << "+" << m.window;
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace valsched
