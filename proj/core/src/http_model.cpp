#include "apitag/http_model.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "apitag/errors.hpp"

namespace apitag {

namespace {

using json = nlohmann::json;

bool is_token_char(char c) {
  static const std::string extra = "!#$%&'*+-.^_`|~";
  return std::isalnum(static_cast<unsigned char>(c)) || extra.find(c) != std::string::npos;
}

bool valid_token(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_token_char);
}

std::vector<std::pair<std::string, std::string>> parse_form(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::string_view pair : split(text, '&')) {
    if (pair.empty()) continue;
    std::size_t eq = pair.find('=');
    std::string_view name = eq == std::string_view::npos ? pair : pair.substr(0, eq);
    std::string_view value = eq == std::string_view::npos ? std::string_view{} : pair.substr(eq + 1);
    out.emplace_back(url_decode(name, true), url_decode(value, true));
  }
  return out;
}

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Flattens a JSON object body one nesting level: {"a":{"b":1}} -> {"a.b":"1"}.
// Anything deeper keeps its raw JSON text as the value.
std::vector<std::pair<std::string, std::string>> flatten_json_body(std::string_view body) {
  std::vector<std::pair<std::string, std::string>> out;
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return out;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_object()) {
      for (const auto& [sub, subval] : value.items()) {
        out.emplace_back(key + "." + sub, subval.is_structured() ? subval.dump() : scalar_to_string(subval));
      }
    } else {
      out.emplace_back(key, scalar_to_string(value));
    }
  }
  return out;
}

std::string decode_chunked(std::string_view rest, std::size_t max_body) {
  std::string body;
  std::size_t pos = 0;
  while (true) {
    std::size_t eol = rest.find("\r\n", pos);
    if (eol == std::string_view::npos) throw MalformedRequest("truncated chunked body");
    std::string_view size_line = rest.substr(pos, eol - pos);
    if (std::size_t ext = size_line.find(';'); ext != std::string_view::npos)
      size_line = size_line.substr(0, ext);
    std::size_t chunk_size = 0;
    try {
      chunk_size = std::stoull(std::string(trim(size_line)), nullptr, 16);
    } catch (const std::exception&) {
      throw MalformedRequest("bad chunk size");
    }
    pos = eol + 2;
    if (chunk_size == 0) break;
    if (pos + chunk_size > rest.size()) throw MalformedRequest("truncated chunk");
    body.append(rest.substr(pos, chunk_size));
    if (body.size() > max_body) throw OversizeBody(body.size(), max_body);
    pos += chunk_size;
    if (rest.substr(pos, 2) != "\r\n") throw MalformedRequest("missing chunk terminator");
    pos += 2;
  }
  return body;
}

}  // namespace

const std::string* ParsedRequest::header(std::string_view name) const {
  for (const auto& [k, v] : headers)
    if (iequals(k, name)) return &v;
  return nullptr;
}

const std::string* ParsedRequest::query_param(std::string_view name) const {
  for (const auto& [k, v] : query_params)
    if (k == name) return &v;
  return nullptr;
}

const std::string* ParsedRequest::body_param(std::string_view name) const {
  for (const auto& [k, v] : body_params)
    if (k == name) return &v;
  return nullptr;
}

std::vector<std::pair<std::string, std::string>> ParsedRequest::merged_params() const {
  std::vector<std::pair<std::string, std::string>> merged;
  merged.reserve(query_params.size() + body_params.size());
  for (const auto& [k, v] : query_params) {
    const std::string* shadow = body_param(k);
    merged.emplace_back(k, shadow ? *shadow : v);
  }
  for (const auto& [k, v] : body_params) {
    bool already = std::any_of(merged.begin(), merged.end(),
                               [&](const auto& p) { return p.first == k; });
    if (!already) merged.emplace_back(k, v);
  }
  return merged;
}

std::string ParsedRequest::request_line_short() const {
  std::string line = method + " " + path;
  bool first = true;
  for (const auto& [k, v] : query_params) {
    line += first ? "?" : "&";
    line += url_encode(k);
    line += "=";
    line += url_encode(v);
    first = false;
  }
  return line;
}

ParsedRequest parse_request(std::string_view raw, std::string_view peer, std::size_t max_body) {
  ParsedRequest r;
  r.peer_address = std::string(peer);

  std::size_t head_end = raw.find("\r\n\r\n");
  std::size_t body_start;
  std::string line_sep = "\r\n";
  if (head_end != std::string_view::npos) {
    body_start = head_end + 4;
  } else {
    head_end = raw.find("\n\n");
    if (head_end == std::string_view::npos) {
      head_end = raw.size();
      body_start = raw.size();
    } else {
      body_start = head_end + 2;
    }
    line_sep = "\n";
  }
  std::string_view head = raw.substr(0, head_end);

  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < head.size()) {
    std::size_t eol = head.find(line_sep, pos);
    if (eol == std::string_view::npos) eol = head.size();
    std::string_view line = head.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = eol + line_sep.size();
  }
  if (lines.empty() || lines[0].empty()) throw MalformedRequest("empty request line");

  // Request line: METHOD SP target SP version
  std::vector<std::string_view> parts = split(lines[0], ' ');
  if (parts.size() != 3) throw MalformedRequest("bad request line");
  if (!valid_token(parts[0])) throw MalformedRequest("bad method token");
  if (!parts[2].starts_with("HTTP/")) throw MalformedRequest("bad protocol version");
  r.method = std::string(parts[0]);
  r.version = std::string(parts[2]);

  std::string_view target = parts[1];
  std::size_t q = target.find('?');
  // The path keeps its original spelling (no percent-decoding); key
  // normalization handles escape-hex case separately.
  r.path = std::string(q == std::string_view::npos ? target : target.substr(0, q));
  if (q != std::string_view::npos) r.query_params = parse_form(target.substr(q + 1));

  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.empty()) continue;
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0 ||
        !valid_token(line.substr(0, colon)))
      throw MalformedRequest("bad header line");
    r.headers.emplace_back(to_lower(line.substr(0, colon)),
                           std::string(trim(line.substr(colon + 1))));
  }

  std::string_view rest = body_start < raw.size() ? raw.substr(body_start) : std::string_view{};
  const std::string* te = r.header("transfer-encoding");
  if (te && to_lower(*te).find("chunked") != std::string::npos) {
    r.body_raw = decode_chunked(rest, max_body);
  } else if (const std::string* cl = r.header("content-length")) {
    std::optional<double> n = parse_number(*cl);
    if (!n || *n < 0) throw MalformedRequest("bad content-length");
    std::size_t len = static_cast<std::size_t>(*n);
    if (len > max_body) throw OversizeBody(len, max_body);
    if (rest.size() < len) throw MalformedRequest("body shorter than content-length");
    r.body_raw = std::string(rest.substr(0, len));
  } else {
    if (rest.size() > max_body) throw OversizeBody(rest.size(), max_body);
    r.body_raw = std::string(rest);
  }

  if (!r.body_raw.empty()) {
    const std::string* ct = r.header("content-type");
    std::string ctl = ct ? to_lower(*ct) : "";
    std::string_view body = r.body_raw;
    if (ctl.find("application/x-www-form-urlencoded") != std::string::npos) {
      r.body_params = parse_form(body);
    } else if (ctl.find("json") != std::string::npos ||
               (ctl.empty() && !trim(body).empty() && trim(body).front() == '{')) {
      r.body_params = flatten_json_body(body);
    }
  }
  return r;
}

std::string serialize_request(const ParsedRequest& r) {
  std::string out = r.request_line_short() + " " + r.version + "\r\n";
  bool had_content_length = false;
  for (const auto& [k, v] : r.headers) {
    if (k == "content-length" || k == "transfer-encoding") {
      had_content_length = true;
      continue;
    }
    out += k;
    out += ": ";
    out += v;
    out += "\r\n";
  }
  if (!r.body_raw.empty() || had_content_length)
    out += "content-length: " + std::to_string(r.body_raw.size()) + "\r\n";
  out += "\r\n";
  out += r.body_raw;
  return out;
}

std::string normalize_key_path(std::string_view path) {
  std::string out;
  out.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    char c = path[i];
    if (c == '%' && i + 2 < path.size()) {
      out.push_back('%');
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(path[i + 1]))));
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(path[i + 2]))));
      i += 2;
    } else {
      out.push_back(c);
    }
  }
  if (out.size() > 1 && out.back() == '/') out.pop_back();
  if (out.empty()) out = "/";
  return out;
}

CacheKey request_key(const ParsedRequest& r) {
  return CacheKey{r.method, normalize_key_path(r.path)};
}

SourceAttributes extract_source_attributes(const ParsedRequest& r) {
  SourceAttributes src;
  src.client_ip = r.peer_address;
  if (const std::string* fwd = r.header("x-forwarded-for")) {
    std::vector<std::string> hops;
    for (std::string_view part : split(*fwd, ','))
      if (!trim(part).empty()) hops.emplace_back(trim(part));
    src.forwarded_for = std::move(hops);
  }
  if (const std::string* real = r.header("x-real-ip")) src.real_ip = std::string(trim(*real));
  return src;
}

}  // namespace apitag
