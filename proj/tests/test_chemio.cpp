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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "pgen/chemio.hpp"
#include "pgen/synthetic.hpp"

namespace pgen {
namespace {

constexpr const char* kAlaCa = "ATOM      2  CA  ALA A   1      11.104   6.134  -6.504  1.00  0.00           C\n";

TEST(Pdb, SingleAlphaCarbon) {
  const std::vector<Atom> atoms = parse_pocket_pdb(kAlaCa);
  ASSERT_EQ(atoms.size(), 1u);
  EXPECT_EQ(atoms[0].element, Element::C);
  EXPECT_EQ(atoms[0].residue, AminoAcid::ALA);
  EXPECT_TRUE(atoms[0].backbone);
  EXPECT_EQ(atoms[0].origin, Origin::Pocket);
  EXPECT_EQ(atoms[0].coord, (Vec3{11.104, 6.134, -6.504}));
}

TEST(Pdb, FixtureTable) {
  const std::string text =
      "HEADER    TEST\n"
      "ATOM      1  N   GLY A   1       1.000   2.000   3.000  1.00  0.00           N\n"
      "ATOM      2  CB  SER A   2       0.500  -1.250   2.000  1.00  0.00           C\n"
      "ATOM      3  OG  SER A   2       0.000   0.000   0.000  1.00  0.00           O\n"
      "ATOM      4  H   SER A   2       0.000   0.000   1.000  1.00  0.00           H\n"
      "HETATM    5  O   HOH A 101       9.000   9.000   9.000  1.00  0.00           O\n"
      "ATOM      6  SG ACYS A   3       4.000   4.000   4.000  0.50  0.00           S\n"
      "ATOM      7  SG BCYS A   3       4.100   4.100   4.100  0.50  0.00           S\n"
      "ATOM      8 CL   LIG A   4      -1.000  -1.000  -1.000  1.00  0.00\n"
      "HETATM    9  C1  XYZ A   5       2.000   2.000   2.000  1.00  0.00           C\n"
      "END\n";
  const std::vector<Atom> atoms = parse_pocket_pdb(text);
  ASSERT_EQ(atoms.size(), 6u);
  const Element el[] = {Element::N, Element::C, Element::O, Element::S, Element::Cl, Element::C};
  const AminoAcid aa[] = {AminoAcid::GLY, AminoAcid::SER, AminoAcid::SER, AminoAcid::CYS, AminoAcid::UNK, AminoAcid::UNK};
  const bool bb[] = {true, false, false, false, false, false};
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(atoms[i].element, el[i]) << i;
    EXPECT_EQ(atoms[i].residue, aa[i]) << i;
    EXPECT_EQ(atoms[i].backbone, bb[i]) << i;
  }
  EXPECT_EQ(atoms[3].coord, (Vec3{4, 4, 4}));
}

TEST(Pdb, Errors) {
  EXPECT_THROW(parse_pocket_pdb("HEADER nothing\nEND\n"), FormatError);
  EXPECT_THROW(parse_pocket_pdb("ATOM      1  FE  HEM A   1       0.000   0.000   0.000  1.00  0.00          FE\n"),
               FormatError);
  EXPECT_THROW(parse_pocket_pdb("ATOM      1  CA  ALA A   1       abc     0.000   0.000  1.00  0.00           C\n"),
               FormatError);
}

TEST(Pdb, WriteReadRoundTrip) {
  Rng rng(1);
  const MoleculeFragment lig = random_ligand(rng, 10);
  std::vector<Atom> pocket = random_pocket_around(lig, rng);
  pocket[0].element = Element::N;
  pocket[0].backbone = true;
  pocket[1].element = Element::S;
  const std::vector<Atom> back = parse_pocket_pdb(write_pocket_pdb(pocket));
  ASSERT_EQ(back.size(), pocket.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].element, pocket[i].element);
    EXPECT_EQ(back[i].residue, pocket[i].residue);
    EXPECT_EQ(back[i].backbone, pocket[i].backbone);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(back[i].coord[k], pocket[i].coord[k], 5e-4);
  }
}

TEST(Sdf, SingleBondCountsLine) {
  MoleculeFragment m;
  m.add_atom(Element::C, {0, 0, 0});
  m.add_atom(Element::O, {1.43, 0, 0});
  m.add_bond(0, 1, BondOrder::Single);
  const std::string sdf = write_sdf(std::span<const MoleculeFragment>(&m, 1));
  EXPECT_NE(sdf.find("\n  2  1  0  0"), std::string::npos);
  EXPECT_NE(sdf.find("  1  2  1  0\n"), std::string::npos);
  EXPECT_NE(sdf.find("M  END\n$$$$\n"), std::string::npos);
}

TEST(Sdf, AromaticWrittenAsFour) {
  MoleculeFragment m;
  for (int i = 0; i < 6; ++i) m.add_atom(Element::C, {1.39 * std::cos(i * M_PI / 3), 1.39 * std::sin(i * M_PI / 3), 0});
  for (int i = 0; i < 6; ++i) m.add_bond(i, (i + 1) % 6, BondOrder::Aromatic);
  const std::string sdf = write_sdf(std::span<const MoleculeFragment>(&m, 1));
  EXPECT_NE(sdf.find("  1  2  4  0\n"), std::string::npos);
  const auto back = read_sdf(sdf);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].bond(0, 1), BondOrder::Aromatic);
}

TEST(Sdf, Faults) {
  MoleculeFragment big;
  for (int i = 0; i < 1000; ++i) big.add_atom(Element::C, {double(i), 0, 0});
  EXPECT_THROW(write_sdf(std::span<const MoleculeFragment>(&big, 1)), FormatError);

  MoleculeFragment m;
  m.add_atom(Element::C, {0, 0, 0});
  m.add_atom(Element::C, {1.5, 0, 0});
  m.add_bond(0, 1, BondOrder::Single);
  std::string sdf = write_sdf(std::span<const MoleculeFragment>(&m, 1));
  std::string bad_order = sdf;
  bad_order.replace(bad_order.find("  1  2  1  0"), 12, "  1  2  9  0");
  EXPECT_THROW(read_sdf(bad_order), FormatError);
  std::string no_end = sdf.substr(0, sdf.find("$$$$"));
  EXPECT_THROW(read_sdf(no_end), FormatError);
  std::string bad_elem = sdf;
  bad_elem.replace(bad_elem.find(" C  "), 4, " Xe ");
  EXPECT_THROW(read_sdf(bad_elem), FormatError);
  std::string out_of_range = sdf;
  out_of_range.replace(out_of_range.find("  1  2  1  0"), 12, "  1  7  1  0");
  EXPECT_THROW(read_sdf(out_of_range), FormatError);
  EXPECT_TRUE(read_sdf("").empty());
}

TEST(Sdf, RandomRoundTrips) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<MoleculeFragment> mols;
    const int count = 1 + trial % 3;
    for (int k = 0; k < count; ++k) mols.push_back(random_ligand(rng, 1 + uniform_index(rng, 15)));
    const std::string text = write_sdf(mols);
    const std::vector<MoleculeFragment> back = read_sdf(text);
    ASSERT_EQ(back.size(), mols.size());
    for (std::size_t k = 0; k < mols.size(); ++k) {
      ASSERT_EQ(back[k].size(), mols[k].size());
      ASSERT_EQ(back[k].bonds().size(), mols[k].bonds().size());
      for (int i = 0; i < mols[k].size(); ++i) {
        EXPECT_EQ(back[k].atom(i).element, mols[k].atom(i).element);
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(back[k].atom(i).coord[c], mols[k].atom(i).coord[c], 5.01e-5);
      }
      for (const Bond& b : mols[k].bonds()) EXPECT_EQ(back[k].bond(b.i, b.j), b.order);
    }
    EXPECT_EQ(write_sdf(back), text);
  }
}

Checkpoint random_checkpoint(Rng& rng) {
  Checkpoint c;
  const int n = static_cast<int>(uniform_index(rng, 6));
  for (int i = 0; i < n; ++i) {
    CheckpointEntry e;
    e.name = "p" + std::to_string(i) + (i % 2 ? ".w" : "/b");
    e.value = Array<float>(static_cast<int>(uniform_index(rng, 5)), 1 + static_cast<int>(uniform_index(rng, 7)));
    for (float& x : e.value.data) x = static_cast<float>(standard_normal(rng) * std::pow(10.0, uniform(rng, -30, 30)));
    c.entries.push_back(std::move(e));
  }
  c.meta_json = "{\"trial\":" + std::to_string(uniform_index(rng, 1000)) + "}";
  return c;
}

TEST(Checkpoint, RandomRoundTripsAreBitIdentical) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Checkpoint c = random_checkpoint(rng);
    const std::string bytes = save_checkpoint(c);
    EXPECT_EQ(bytes.substr(0, 8), kCheckpointMagic);
    const Checkpoint back = load_checkpoint(bytes);
    ASSERT_EQ(back.entries.size(), c.entries.size());
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
      EXPECT_EQ(back.entries[i].name, c.entries[i].name);
      EXPECT_EQ(back.entries[i].value.rows, c.entries[i].value.rows);
      EXPECT_EQ(back.entries[i].value.cols, c.entries[i].value.cols);
      ASSERT_EQ(back.entries[i].value.data.size(), c.entries[i].value.data.size());
      EXPECT_EQ(0, std::memcmp(back.entries[i].value.data.data(), c.entries[i].value.data.data(),
                               c.entries[i].value.data.size() * sizeof(float)));
    }
    EXPECT_EQ(save_checkpoint(back), bytes);
  }
}

TEST(Checkpoint, EmptyAndCorrupted) {
  const Checkpoint empty;
  const std::string bytes = save_checkpoint(empty);
  EXPECT_TRUE(load_checkpoint(bytes).entries.empty());

  Rng rng(4);
  Checkpoint c;
  c.entries.push_back({"w", Array<float>(2, 3, 1.5f)});
  const std::string good = save_checkpoint(c);
  EXPECT_THROW(load_checkpoint(good.substr(0, good.size() - 1)), FormatError);
  EXPECT_THROW(load_checkpoint(good + "x"), FormatError);
  std::string magic = good;
  magic[0] = 'X';
  EXPECT_THROW(load_checkpoint(magic), FormatError);
  std::string length = good;
  length[8] = static_cast<char>(0xff);
  length[9] = static_cast<char>(0xff);
  EXPECT_THROW(load_checkpoint(length), FormatError);
  EXPECT_THROW(load_checkpoint(""), FormatError);
  Checkpoint bad_meta;
  bad_meta.meta_json = "[1]";
  EXPECT_THROW(save_checkpoint(bad_meta), std::invalid_argument);
}

TEST(Checkpoint, StoreRestore) {
  ParamStore<float> a;
  a.add("x.w", 2, 2);
  a.add("x.b", 1, 2);
  a.entries()[0].value.data = {1, 2, 3, 4};
  a.entries()[0].m.data = {0.1f, 0.2f, 0.3f, 0.4f};
  a.entries()[1].v.data = {5, 6};
  ParamStore<float> b;
  b.add("x.w", 2, 2);
  b.add("x.b", 1, 2);
  restore_store(b, load_checkpoint(save_checkpoint(checkpoint_from_store(a, true))));
  EXPECT_EQ(b.entries()[0].value.data, a.entries()[0].value.data);
  EXPECT_EQ(b.entries()[0].m.data, a.entries()[0].m.data);
  EXPECT_EQ(b.entries()[1].v.data, a.entries()[1].v.data);

  ParamStore<float> wrong;
  wrong.add("x.w", 2, 3);
  wrong.add("x.b", 1, 2);
  EXPECT_THROW(restore_store(wrong, checkpoint_from_store(a, false)), FormatError);
  ParamStore<float> missing;
  missing.add("y.w", 2, 2);
  missing.add("x.b", 1, 2);
  EXPECT_THROW(restore_store(missing, checkpoint_from_store(a, false)), FormatError);
}

TEST(Manifest, RelativePathsResolveAgainstManifest) {
  const auto dir = std::filesystem::temp_directory_path() / "pgen_manifest_test";
  std::filesystem::create_directories(dir);
  write_file((dir / "m.jsonl").string(),
             "{\"pocket_path\": \"a.pdb\", \"ligand_path\": \"/abs/b.sdf\"}\n\n"
             "{\"pocket_path\": \"sub/c.pdb\", \"ligand_path\": \"d.sdf\"}\n");
  const auto entries = read_manifest((dir / "m.jsonl").string());
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].pocket_path, (dir / "a.pdb").string());
  EXPECT_EQ(entries[0].ligand_path, "/abs/b.sdf");
  EXPECT_EQ(entries[1].pocket_path, (dir / "sub/c.pdb").string());
  write_file((dir / "bad.jsonl").string(), "{\"pocket_path\": 3}\n");
  EXPECT_THROW(read_manifest((dir / "bad.jsonl").string()), FormatError);
  write_file((dir / "empty.jsonl").string(), "\n");
  EXPECT_THROW(read_manifest((dir / "empty.jsonl").string()), FormatError);
  EXPECT_THROW(read_manifest((dir / "absent.jsonl").string()), IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace pgen
