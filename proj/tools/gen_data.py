#!/usr/bin/env python3
"""Regenerates the bundled data files in data/.

css_colors.tsv       CSS3/X11 named colors converted to CIE Lab (D65).
name_vectors_d16.tsv deterministic stand-in name vectors, 16 wide.
merges.txt           BPE merges learned on synthetic prompt text.

Usage: tools/gen_data.py [data_dir]
"""
import random
import sys
from collections import Counter
from pathlib import Path

CSS = """aliceblue F0F8FF
antiquewhite FAEBD7
aqua 00FFFF
aquamarine 7FFFD4
azure F0FFFF
beige F5F5DC
bisque FFE4C4
black 000000
blanchedalmond FFEBCD
blue 0000FF
blueviolet 8A2BE2
brown A52A2A
burlywood DEB887
cadetblue 5F9EA0
chartreuse 7FFF00
chocolate D2691E
coral FF7F50
cornflowerblue 6495ED
cornsilk FFF8DC
crimson DC143C
cyan 00FFFF
darkblue 00008B
darkcyan 008B8B
darkgoldenrod B8860B
darkgray A9A9A9
darkgreen 006400
darkgrey A9A9A9
darkkhaki BDB76B
darkmagenta 8B008B
darkolivegreen 556B2F
darkorange FF8C00
darkorchid 9932CC
darkred 8B0000
darksalmon E9967A
darkseagreen 8FBC8F
darkslateblue 483D8B
darkslategray 2F4F4F
darkslategrey 2F4F4F
darkturquoise 00CED1
darkviolet 9400D3
deeppink FF1493
deepskyblue 00BFFF
dimgray 696969
dimgrey 696969
dodgerblue 1E90FF
firebrick B22222
floralwhite FFFAF0
forestgreen 228B22
fuchsia FF00FF
gainsboro DCDCDC
ghostwhite F8F8FF
gold FFD700
goldenrod DAA520
gray 808080
grey 808080
green 008000
greenyellow ADFF2F
honeydew F0FFF0
hotpink FF69B4
indianred CD5C5C
indigo 4B0082
ivory FFFFF0
khaki F0E68C
lavender E6E6FA
lavenderblush FFF0F5
lawngreen 7CFC00
lemonchiffon FFFACD
lightblue ADD8E6
lightcoral F08080
lightcyan E0FFFF
lightgoldenrodyellow FAFAD2
lightgray D3D3D3
lightgreen 90EE90
lightgrey D3D3D3
lightpink FFB6C1
lightsalmon FFA07A
lightseagreen 20B2AA
lightskyblue 87CEFA
lightslategray 778899
lightslategrey 778899
lightsteelblue B0C4DE
lightyellow FFFFE0
lime 00FF00
limegreen 32CD32
linen FAF0E6
magenta FF00FF
maroon 800000
mediumaquamarine 66CDAA
mediumblue 0000CD
mediumorchid BA55D3
mediumpurple 9370DB
mediumseagreen 3CB371
mediumslateblue 7B68EE
mediumspringgreen 00FA9A
mediumturquoise 48D1CC
mediumvioletred C71585
midnightblue 191970
mintcream F5FFFA
mistyrose FFE4E1
moccasin FFE4B5
navajowhite FFDEAD
navy 000080
oldlace FDF5E6
olive 808000
olivedrab 6B8E23
orange FFA500
orangered FF4500
orchid DA70D6
palegoldenrod EEE8AA
palegreen 98FB98
paleturquoise AFEEEE
palevioletred DB7093
papayawhip FFEFD5
peachpuff FFDAB9
peru CD853F
pink FFC0CB
plum DDA0DD
powderblue B0E0E6
purple 800080
red FF0000
rosybrown BC8F8F
royalblue 4169E1
saddlebrown 8B4513
salmon FA8072
sandybrown F4A460
seagreen 2E8B57
seashell FFF5EE
sienna A0522D
silver C0C0C0
skyblue 87CEEB
slateblue 6A5ACD
slategray 708090
slategrey 708090
snow FFFAFA
springgreen 00FF7F
steelblue 4682B4
tan D2B48C
teal 008080
thistle D8BFD8
tomato FF6347
turquoise 40E0D0
violet EE82EE
wheat F5DEB3
white FFFFFF
whitesmoke F5F5F5
yellow FFFF00
yellowgreen 9ACD32"""

M = [
    [0.41245643908969210174, 0.35757607764390896921, 0.18043748326639892905],
    [0.21267285140562248996, 0.71515215528781793842, 0.07217499330655957162],
    [0.019333895582329317269, 0.11919202588130298974, 0.95030407853636769299],
]
WHITE = (0.95047, 1.0, 1.08883)


def srgb_to_lab(r, g, b):
    def lin(c):
        c /= 255.0
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4

    rgb = [lin(r), lin(g), lin(b)]
    xyz = [sum(M[i][j] * rgb[j] for j in range(3)) / WHITE[i] for i in range(3)]

    def f(t):
        d = 6.0 / 29.0
        return t ** (1.0 / 3.0) if t > d ** 3 else t / (3 * d * d) + 4.0 / 29.0

    fx, fy, fz = (f(t) for t in xyz)
    return 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)


def css_table():
    rows = []
    for line in CSS.splitlines():
        name, hexcode = line.split()
        r, g, b = (int(hexcode[i:i + 2], 16) for i in (0, 2, 4))
        rows.append((name, srgb_to_lab(r, g, b)))
    return rows


def name_vectors(rows, dim=16):
    # Lab-correlated directions plus a per-name component, as a stand-in for
    # text-encoder vectors of the names.
    proj_rng = random.Random("numcolor-name-projection")
    proj = [[proj_rng.gauss(0.0, 1.0) for _ in range(3)] for _ in range(dim)]
    out = []
    for name, (L, a, b) in rows:
        rng = random.Random("numcolor-name:" + name)
        x = (L / 50.0 - 1.0, a / 80.0, b / 80.0)
        v = [sum(p[i] * x[i] for i in range(3)) + 0.3 * rng.gauss(0.0, 1.0) for p in proj]
        out.append((name, v))
    return out


def bpe_training_text(phrases_path, n_literals=4000):
    rng = random.Random(20240611)
    words = []
    for line in Path(phrases_path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#") and not line.startswith("["):
            words.extend(line.split())
    for _ in range(n_literals):
        r, g, b = (rng.randrange(256) for _ in range(3))
        words.append("#%02X%02X%02X" % (r, g, b) if rng.random() < 0.7 else "#%02x%02x%02x" % (r, g, b))
        words.extend(("rgb(%d," % r, "%d," % g, "%d)" % b))
    return words


def learn_bpe(words, n_merges):
    vocab = Counter(tuple(w) for w in words)
    merges = []
    for _ in range(n_merges):
        pairs = Counter()
        for word, freq in vocab.items():
            for i in range(len(word) - 1):
                pairs[(word[i], word[i + 1])] += freq
        if not pairs:
            break
        best = min(pairs.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        merges.append(best)
        merged = {}
        for word, freq in vocab.items():
            out, i = [], 0
            while i < len(word):
                if i + 1 < len(word) and (word[i], word[i + 1]) == best:
                    out.append(word[i] + word[i + 1])
                    i += 2
                else:
                    out.append(word[i])
                    i += 1
            merged[tuple(out)] = merged.get(tuple(out), 0) + freq
        vocab = merged
    return merges


def main():
    data = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data")
    rows = css_table()
    with open(data / "css_colors.tsv", "w") as f:
        f.write("# CSS3/X11 named colors, CIE Lab under D65 (2 degree observer)\n")
        for name, (L, a, b) in rows:
            f.write("%s\t%.10f\t%.10f\t%.10f\n" % (name, L, a, b))
    with open(data / "name_vectors_d16.tsv", "w") as f:
        for name, v in name_vectors(rows):
            f.write(name + "\t" + "\t".join("%.8f" % x for x in v) + "\n")
    merges = learn_bpe(bpe_training_text(data / "phrases.txt"), 400)
    with open(data / "merges.txt", "w") as f:
        f.write("#version: 0.2\n")
        for a, b in merges:
            f.write("%s %s\n" % (a, b))


if __name__ == "__main__":
    main()
