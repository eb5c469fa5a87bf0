// SPDX-FileCopyrightText: Copyright (c) 2026 The pgen Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pgen/chemio.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pgen {

namespace {

using json = nlohmann::json;

std::string_view field(std::string_view line, std::size_t first_col, std::size_t last_col) {
  // 1-based inclusive PDB columns, clipped to the line length.
  if (line.size() < first_col) return {};
  return line.substr(first_col - 1, std::min(last_col, line.size()) - first_col + 1);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

std::string upper(std::string_view s) {
  std::string o(s);
  for (char& c : o) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return o;
}

// Element from the atom name when columns 77-78 are blank: a name starting
// in column 13 may carry a two-letter element, otherwise the first letter.
std::string element_from_atom_name(std::string_view raw_name) {
  std::string letters;
  for (char c : raw_name)
    if (std::isalpha(static_cast<unsigned char>(c))) letters.push_back(static_cast<char>(std::toupper(c)));
  if (letters.empty()) return {};
  const bool left_aligned = !raw_name.empty() && raw_name[0] != ' ' && !std::isdigit(static_cast<unsigned char>(raw_name[0]));
  if (left_aligned && letters.size() >= 2) {
    const std::string two = letters.substr(0, 2);
    if (two == "CL" || two == "BR" || two == "FE" || two == "ZN" || two == "MG" || two == "MN"
        || two == "CA" || two == "NA" || two == "CU" || two == "CO" || two == "NI" || two == "SE")
      return two;
  }
  return letters.substr(0, 1);
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<Atom> parse_pocket_pdb(std::string_view text) {
  std::vector<Atom> atoms;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string_view rec = field(line, 1, 6);
    if (rec != "ATOM  " && rec != "HETATM" && trim(rec) != "ATOM" && trim(rec) != "HETATM") continue;

    const std::string_view alt = field(line, 17, 17);
    if (!alt.empty() && alt[0] != ' ' && alt[0] != 'A') continue;
    const std::string res = upper(trim(field(line, 18, 20)));
    if (res == "HOH" || res == "WAT") continue;
    const std::string_view raw_name = field(line, 13, 16);
    const std::string name = upper(trim(raw_name));

    std::string sym = upper(trim(field(line, 77, 78)));
    if (sym.empty()) sym = element_from_atom_name(raw_name);
    if (sym == "H" || sym == "D") continue;
    const auto element = try_element_from_symbol(sym);
    if (!element)
      throw FormatError("line " + std::to_string(line_no) + ": element '" + sym
                        + "' is outside the vocabulary");

    Vec3 c;
    if (!parse_double(field(line, 31, 38), c[0]) || !parse_double(field(line, 39, 46), c[1])
        || !parse_double(field(line, 47, 54), c[2]))
      throw FormatError("line " + std::to_string(line_no) + ": unparseable coordinate field");

    Atom a;
    a.element = *element;
    a.coord = c;
    a.origin = Origin::Pocket;
    a.residue = amino_acid_from_name(res);
    a.backbone = name == "N" || name == "CA" || name == "C" || name == "O";
    atoms.push_back(a);
  }
  if (atoms.empty()) throw FormatError("no pocket atoms parsed");
  return atoms;
}

std::string write_pocket_pdb(std::span<const Atom> atoms) {
  std::string out;
  char buf[128];
  static constexpr std::string_view backbone_names[] = {"N", "CA", "C", "O"};
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Atom& a = atoms[i];
    const std::string sym = upper(element_symbol(a.element));
    std::string name;
    if (a.backbone) {
      // Backbone names by element; carbon alternates CA / C.
      switch (a.element) {
        case Element::N: name = std::string(backbone_names[0]); break;
        case Element::O: name = std::string(backbone_names[3]); break;
        default: name = i % 2 == 0 ? "CA" : "C"; break;
      }
    } else {
      name = sym + "G";
    }
    const std::string padded = sym.size() == 1 ? " " + name : name;
    std::snprintf(buf, sizeof buf, "ATOM  %5d %-4s %3s A%4d    %8.3f%8.3f%8.3f  1.00  0.00          %2s\n",
                  static_cast<int>(i + 1) % 100000, padded.c_str(),
                  std::string(amino_acid_name(a.residue)).c_str(), static_cast<int>(i / 8 + 1) % 10000,
                  a.coord[0], a.coord[1], a.coord[2], sym.c_str());
    out += buf;
  }
  out += "END\n";
  return out;
}

std::string write_sdf(std::span<const MoleculeFragment> molecules) {
  std::string out;
  char buf[160];
  for (std::size_t m = 0; m < molecules.size(); ++m) {
    const MoleculeFragment& mol = molecules[m];
    if (mol.size() > 999 || mol.bonds().size() > 999)
      throw FormatError("molecule " + std::to_string(m) + " exceeds the 999 atom/bond V2000 limit");
    out += "mol" + std::to_string(m) + "\n  pgen\n\n";
    std::snprintf(buf, sizeof buf, "%3d%3d  0  0  0  0  0  0  0  0999 V2000\n", mol.size(),
                  static_cast<int>(mol.bonds().size()));
    out += buf;
    for (const Atom& a : mol.atoms()) {
      std::snprintf(buf, sizeof buf, "%10.4f%10.4f%10.4f %-3s 0  0  0  0  0  0  0  0  0  0  0  0\n",
                    a.coord[0], a.coord[1], a.coord[2], std::string(element_symbol(a.element)).c_str());
      out += buf;
    }
    for (const Bond& b : mol.bonds()) {
      const int order = b.order == BondOrder::Aromatic ? 4 : static_cast<int>(b.order);
      std::snprintf(buf, sizeof buf, "%3d%3d%3d  0\n", b.i + 1, b.j + 1, order);
      out += buf;
    }
    out += "M  END\n$$$$\n";
  }
  return out;
}

std::vector<MoleculeFragment> read_sdf(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view l = text.substr(start, end - start);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    lines.push_back(l);
    start = end + 1;
  }
  std::vector<MoleculeFragment> mols;
  std::size_t i = 0;
  auto fail = [&](std::size_t line, const std::string& what) -> FormatError {
    return FormatError("sdf line " + std::to_string(line + 1) + ": " + what);
  };
  while (i < lines.size()) {
    // Skip blank separators between records.
    if (trim(lines[i]).empty() && (i + 3 >= lines.size())) break;
    if (i + 3 >= lines.size()) throw fail(i, "truncated header");
    const std::size_t counts = i + 3;
    const std::string_view cl = lines[counts];
    int na = 0, nb = 0;
    if (cl.size() < 6 || !parse_int(cl.substr(0, 3), na) || !parse_int(cl.substr(3, 3), nb) || na < 0 || nb < 0)
      throw fail(counts, "malformed counts line");
    if (cl.find("V3000") != std::string_view::npos) throw fail(counts, "V3000 is not supported");
    if (counts + static_cast<std::size_t>(na) + static_cast<std::size_t>(nb) >= lines.size())
      throw fail(counts, "truncated atom or bond block");
    MoleculeFragment mol;
    for (int a = 0; a < na; ++a) {
      const std::size_t ln = counts + 1 + a;
      const std::string_view l = lines[ln];
      Vec3 c;
      if (l.size() < 34 || !parse_double(l.substr(0, 10), c[0]) || !parse_double(l.substr(10, 10), c[1])
          || !parse_double(l.substr(20, 10), c[2]))
        throw fail(ln, "malformed atom line");
      const std::string sym(trim(l.substr(31, 3)));
      const auto e = try_element_from_symbol(sym);
      if (!e) throw fail(ln, "element '" + sym + "' is outside the vocabulary");
      mol.add_atom(*e, c);
    }
    for (int b = 0; b < nb; ++b) {
      const std::size_t ln = counts + 1 + na + b;
      const std::string_view l = lines[ln];
      int x = 0, y = 0, o = 0;
      if (l.size() < 9 || !parse_int(l.substr(0, 3), x) || !parse_int(l.substr(3, 3), y)
          || !parse_int(l.substr(6, 3), o))
        throw fail(ln, "malformed bond line");
      BondOrder order;
      switch (o) {
        case 1: order = BondOrder::Single; break;
        case 2: order = BondOrder::Double; break;
        case 3: order = BondOrder::Triple; break;
        case 4: order = BondOrder::Aromatic; break;
        default: throw fail(ln, "unknown bond order " + std::to_string(o));
      }
      if (x < 1 || y < 1 || x > na || y > na) throw fail(ln, "bond atom index out of range");
      try {
        mol.add_bond(x - 1, y - 1, order);
      } catch (const std::invalid_argument& e) {
        throw fail(ln, e.what());
      }
    }
    i = counts + 1 + na + nb;
    while (i < lines.size() && lines[i] != "$$$$") ++i;
    if (i == lines.size()) throw fail(i - 1, "missing $$$$ terminator");
    ++i;
    mols.push_back(std::move(mol));
  }
  return mols;
}

std::string save_checkpoint(const Checkpoint& ckpt) {
  json manifest;
  manifest["format"] = 1;
  json entries = json::array();
  std::uint64_t total = 0;
  for (const CheckpointEntry& e : ckpt.entries) {
    if (e.value.size() != static_cast<std::size_t>(e.value.rows) * e.value.cols)
      throw std::invalid_argument("checkpoint entry '" + e.name + "' has inconsistent shape");
    entries.push_back({{"name", e.name}, {"rows", e.value.rows}, {"cols", e.value.cols}});
    total += e.value.size();
  }
  manifest["entries"] = std::move(entries);
  manifest["payload_floats"] = total;
  manifest["meta"] = json::parse(ckpt.meta_json);
  if (!manifest["meta"].is_object()) throw std::invalid_argument("checkpoint meta must be a JSON object");
  const std::string m = manifest.dump();
  std::string out(kCheckpointMagic);
  put_u64(out, m.size());
  out += m;
  out.reserve(out.size() + total * 4);
  for (const CheckpointEntry& e : ckpt.entries)
    for (float f : e.value.data) {
      const std::uint32_t u = std::bit_cast<std::uint32_t>(f);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
    }
  return out;
}

Checkpoint load_checkpoint(std::string_view bytes) {
  const std::size_t header = kCheckpointMagic.size() + 8;
  if (bytes.size() < header || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic)
    throw FormatError("checkpoint: bad magic or truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t mlen = get_u64(p + kCheckpointMagic.size());
  if (mlen > bytes.size() - header) throw FormatError("checkpoint: manifest length exceeds the file");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(header, mlen));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: manifest is not valid JSON: ") + e.what());
  }
  Checkpoint ck;
  std::vector<std::pair<std::string, std::pair<int, int>>> shapes;
  std::uint64_t total = 0;
  try {
    if (manifest.at("format").get<int>() != 1) throw FormatError("checkpoint: unsupported format");
    for (const json& e : manifest.at("entries")) {
      const int r = e.at("rows").get<int>(), c = e.at("cols").get<int>();
      if (r < 0 || c < 0) throw FormatError("checkpoint: negative shape");
      shapes.push_back({e.at("name").get<std::string>(), {r, c}});
      total += static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(c);
    }
    if (manifest.at("payload_floats").get<std::uint64_t>() != total)
      throw FormatError("checkpoint: manifest shapes do not multiply out to the payload length");
    const json& meta = manifest.at("meta");
    if (!meta.is_object()) throw FormatError("checkpoint: meta is not an object");
    ck.meta_json = meta.dump();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed manifest: ") + e.what());
  }
  const std::uint64_t payload = bytes.size() - header - mlen;
  if (payload != total * 4)
    throw FormatError("checkpoint: payload holds " + std::to_string(payload) + " bytes, manifest expects "
                      + std::to_string(total * 4));
  const unsigned char* q = p + header + mlen;
  for (const auto& [name, shape] : shapes) {
    CheckpointEntry e{name, Array<float>(shape.first, shape.second)};
    for (float& f : e.value.data) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(q[b]) << (8 * b);
      f = std::bit_cast<float>(u);
      q += 4;
    }
    ck.entries.push_back(std::move(e));
  }
  return ck;
}

Checkpoint checkpoint_from_store(const ParamStore<float>& store, bool with_optimizer) {
  Checkpoint ck;
  for (const auto& e : store.entries()) ck.entries.push_back({e.name, e.value});
  if (with_optimizer) {
    for (const auto& e : store.entries()) ck.entries.push_back({"adam.m/" + e.name, e.m});
    for (const auto& e : store.entries()) ck.entries.push_back({"adam.v/" + e.name, e.v});
  }
  return ck;
}

void restore_store(ParamStore<float>& store, const Checkpoint& ckpt) {
  std::unordered_map<std::string, const Array<float>*> by_name;
  for (const auto& e : ckpt.entries) by_name[e.name] = &e.value;
  auto take = [&](const std::string& name, Array<float>& dst, bool required) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      if (required) throw FormatError("checkpoint is missing parameter '" + name + "'");
      return;
    }
    if (!it->second->same_shape(dst))
      throw FormatError("checkpoint parameter '" + name + "' has shape (" + std::to_string(it->second->rows)
                        + ", " + std::to_string(it->second->cols) + "), model expects ("
                        + std::to_string(dst.rows) + ", " + std::to_string(dst.cols) + ")");
  };
  // Validate everything before touching the store.
  for (auto& e : store.entries()) {
    take(e.name, e.value, true);
    take("adam.m/" + e.name, e.m, false);
    take("adam.v/" + e.name, e.v, false);
  }
  std::size_t expected = store.size();
  if (!store.entries().empty() && by_name.count("adam.m/" + store.entries().front().name) != 0)
    expected *= 3;
  if (by_name.size() != expected)
    throw FormatError("checkpoint holds " + std::to_string(by_name.size()) + " entries, model expects "
                      + std::to_string(expected));
  for (auto& e : store.entries()) {
    e.value = *by_name.at(e.name);
    if (auto it = by_name.find("adam.m/" + e.name); it != by_name.end()) e.m = *it->second;
    if (auto it = by_name.find("adam.v/" + e.name); it != by_name.end()) e.v = *it->second;
    std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0f);
  }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  const std::string text = read_file(path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      ManifestEntry e{j.at("pocket_path").get<std::string>(), j.at("ligand_path").get<std::string>()};
      for (std::string* p : {&e.pocket_path, &e.ligand_path})
        if (std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty()) throw FormatError(path + ": manifest lists no pairs");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace pgen
