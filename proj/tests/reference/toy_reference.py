#!/usr/bin/env python3
"""Naive reference implementation of the toy pipeline.

Reads the fixture inputs (config.toml, seeds, exclusions, snapshot) and
writes every artifact the pipeline produces, except run_manifest.json,
into OUT_DIR. Community detection is an exhaustive search over all set
partitions, so it only works on tiny graphs.

usage: toy_reference.py FIXTURE_DIR OUT_DIR
"""

import hashlib
import json
import math
import os
import sys
import unicodedata
from collections import defaultdict

import tomli


def sha256_file(path):
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def fixed(v, d=10):
    s = "%.*f" % (d, v)
    if s.startswith("-") and set(s[1:]) <= set("0."):
        s = s[1:]
    return s


def rnd(v):
    return float(fixed(v))


def dump_json(path, obj):
    write(path, json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n")


def write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def read_rows(path):
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f.read().split("\n"):
            if not line.strip() or line.startswith("#"):
                continue
            rows.append(line.split("\t"))
    return rows[0], rows[1:]


def fold(title):
    out, pending = [], False
    for ch in unicodedata.normalize("NFKD", title.lower()):
        if unicodedata.combining(ch):
            continue
        if ch.isalnum():
            if pending and out:
                out.append(" ")
            pending = False
            out.append(ch)
        else:
            pending = True
    return "".join(out)


# --- language identification -------------------------------------------------

def is_letter(c):
    o = ord(c)
    if "a" <= c <= "z" or "A" <= c <= "Z":
        return True
    if o < 0xC0 or o in (0xD7, 0xF7):
        return False
    ranges = [(0xC0, 0x24F), (0x370, 0x3FF), (0x400, 0x52F), (0x1E00, 0x1EFF), (0x3040, 0x30FF),
              (0x3400, 0x4DBF), (0x4E00, 0x9FFF), (0xAC00, 0xD7AF), (0xF900, 0xFAFF)]
    return any(a <= o <= b for a, b in ranges)


def tokens(title):
    toks, cur = [], ""
    for c in title:
        lc = c.lower()
        if len(lc) == 1 and is_letter(lc):
            cur += lc
        elif cur:
            toks.append(cur)
            cur = ""
    if cur:
        toks.append(cur)
    return toks


def trigrams(title):
    grams = []
    for t in tokens(title):
        p = " " + t + " "
        grams.extend(p[i:i + 3] for i in range(len(p) - 2))
    return grams


def load_profiles(directory):
    profiles = {}
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".tsv"):
            continue
        counts = {}
        with open(os.path.join(directory, name), encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                gram, count = line.rsplit("\t", 1)
                counts[gram] = counts.get(gram, 0.0) + float(count)
        profiles[name[:-4]] = counts
    return profiles


def detect(title, profiles):
    letters = han = kana = hangul = 0
    for c in title:
        if not is_letter(c):
            continue
        letters += 1
        o = ord(c)
        if 0x3400 <= o <= 0x4DBF or 0x4E00 <= o <= 0x9FFF or 0xF900 <= o <= 0xFAFF:
            han += 1
        elif 0x3040 <= o <= 0x30FF:
            kana += 1
        elif 0xAC00 <= o <= 0xD7AF:
            hangul += 1
    cjk = han + kana + hangul
    if cjk and 2 * cjk > letters:
        if han >= kana and han >= hangul:
            return "zh"
        return "ja" if kana >= hangul else "ko"
    if len(tokens(title)) < 2:
        return "und"
    vocab = set()
    for counts in profiles.values():
        vocab.update(counts)
    v = len(vocab) + 1
    best, best_score = None, None
    for code in sorted(profiles):
        counts = profiles[code]
        total = sum(counts.values())
        score = sum(math.log(counts.get(g, 0.0) + 1) - math.log(total + v) for g in trigrams(title))
        if best_score is None or score > best_score:
            best, best_score = code, score
    return best


# --- graphs ------------------------------------------------------------------

def components(nodes, edges):
    adj = {n: set() for n in nodes}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen, comps = set(), []
    for n in sorted(nodes):
        if n in seen:
            continue
        stack, comp = [n], set()
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj[x] - comp)
        seen |= comp
        comps.append(comp)
    return comps


def prune(nodes, edges):
    nodes = set(nodes)
    while True:
        deg = {n: 0 for n in nodes}
        for u, v in edges:
            if u in nodes and v in nodes:
                deg[u] += 1
                deg[v] += 1
        low = {n for n in nodes if deg[n] <= 1}
        if not low:
            return nodes
        nodes -= low


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]
        yield [[first]] + p


def q_undirected(nodes, uedges, label, gamma):
    m = len(uedges)
    deg = defaultdict(int)
    for u, v in uedges:
        deg[u] += 1
        deg[v] += 1
    adj = set(uedges) | {(v, u) for u, v in uedges}
    q = 0.0
    for i in nodes:
        for j in nodes:
            if label[i] == label[j]:
                q += (1.0 if (i, j) in adj else 0.0) - gamma * deg[i] * deg[j] / (2.0 * m)
    return q / (2.0 * m)


def q_directed(nodes, edges, label):
    m = len(edges)
    kout, kin = defaultdict(int), defaultdict(int)
    for u, v in edges:
        kout[u] += 1
        kin[v] += 1
    es = set(edges)
    q = 0.0
    for i in nodes:
        for j in nodes:
            if label[i] == label[j]:
                q += (1.0 if (i, j) in es else 0.0) - kout[i] * kin[j] / m
    return q / m


def canonical(groups):
    groups = sorted((sorted(g) for g in groups), key=lambda g: (-len(g), g[0]))
    return {n: c for c, g in enumerate(groups) for n in g}


def best_partition(nodes, uedges, gamma):
    nodes = sorted(nodes)
    if not uedges:
        return canonical([[n] for n in nodes])
    scored = []
    for p in set_partitions(nodes):
        lab = {n: c for c, g in enumerate(p) for n in g}
        scored.append((q_undirected(nodes, uedges, lab, gamma), p))
    scored.sort(key=lambda t: -t[0])
    if len(scored) > 1 and scored[0][0] - scored[1][0] < 1e-9:
        sys.exit("reference: modularity optimum is not unique")
    return canonical(scored[0][1])


# --- pipeline ----------------------------------------------------------------

def main(fixture, out):
    with open(os.path.join(fixture, "config.toml"), "rb") as f:
        cfg = tomli.load(f)
    prov = cfg["provider"]
    seed_path = os.path.join(fixture, cfg["seed_path"])
    excl_path = os.path.join(fixture, cfg["exclusions_path"])
    snap = os.path.join(fixture, prov["snapshot_path"])
    page_size = prov.get("page_size", 100)
    depth_max = cfg.get("depth", 2)
    gamma = float(cfg.get("resolution", 1.0))
    threshold = cfg.get("main_community_threshold", 0.01)
    top_k = cfg.get("top_members", 5)
    ic_top = cfg.get("inter_citation_top", 5)
    first_level = cfg.get("composition_level", "first_level_only") == "first_level_only"

    lines = [
        "budget=none",
        "composition_level=" + cfg.get("composition_level", "first_level_only"),
        "depth=%d" % depth_max,
        "inter_citation_top=%d" % ic_top,
        "main_community_threshold=%.17g" % threshold,
        "provider.mode=offline",
        "provider.page_size=%d" % page_size,
        "resolution=%.17g" % gamma,
        "rng_seed=%d" % cfg.get("rng_seed", 0),
        "similarity=dice",
        "std_mode=population",
        "top_members=%d" % top_k,
        "weighted_symmetrize=false",
        "seed_sha256=" + sha256_file(seed_path),
        "exclusions_sha256=" + sha256_file(excl_path),
        "snapshot_nodes_sha256=" + sha256_file(os.path.join(snap, "nodes.tsv")),
        "snapshot_edges_sha256=" + sha256_file(os.path.join(snap, "edges.tsv")),
    ]
    chash = hashlib.sha256("".join(l + "\n" for l in sorted(lines)).encode()).hexdigest()
    comment = "# config_hash: " + chash + "\n"
    P = lambda rel: os.path.join(out, rel)

    # ingest
    _, rows = read_rows(seed_path)
    records, order = {}, []
    for raw_key, tag, title, authors, year, doi in rows:
        key = fold(" ".join(title.split())) + "|" + year
        if key not in records:
            records[key] = {"raw_key": raw_key, "title": " ".join(title.split()),
                            "authors": [a.strip() for a in authors.split(";") if a.strip()],
                            "year": year, "doi": doi, "tags": set()}
            order.append(key)
        r = records[key]
        r["tags"].add(tag)
        if not r["doi"] and doi:
            r["doi"] = doi
    with open(excl_path, encoding="utf-8") as f:
        excl = {l.strip() for l in f if l.strip() and not l.strip().startswith("#")}
    kept = [records[k] for k in order if records[k]["raw_key"] not in excl]
    applied = sorted(records[k]["raw_key"] for k in order if records[k]["raw_key"] in excl)
    absent = sorted(excl - {records[k]["raw_key"] for k in order})
    text = comment + "raw_key\tchapter_tag\ttitle\tauthors\tyear\tdoi\n"
    for r in kept:
        for tag in sorted(r["tags"]):
            text += "\t".join([r["raw_key"], tag, r["title"], "; ".join(r["authors"]), r["year"], r["doi"]]) + "\n"
    write(P("corpus.tsv"), text)
    dump_json(P("ingest_report.json"), {
        "records": len(kept), "chapters": sorted({t for r in kept for t in r["tags"]}),
        "exclusions_applied": applied, "exclusions_absent": absent, "config_hash": chash})

    # crawl
    _, nrows = read_rows(os.path.join(snap, "nodes.tsv"))
    papers = {}
    for row in nrows:
        row = row + [""] * (4 - len(row))
        papers[row[0]] = {"title": row[1], "year": row[2], "doi": row[3]}
    _, erows = read_rows(os.path.join(snap, "edges.tsv"))
    citers = defaultdict(set)
    for u, v in erows:
        if u != v:
            citers[v].add(u)

    def resolve(r):
        if r["doi"]:
            for pid in sorted(papers):
                if papers[pid]["doi"].lower() == r["doi"].lower():
                    return pid
        hits = [pid for pid in sorted(papers)
                if fold(papers[pid]["title"]) == fold(r["title"]) and papers[pid]["year"] == r["year"]]
        return hits[0] if hits else None

    resolved, unresolved = [], []
    for r in kept:
        pid = resolve(r)
        (resolved if pid else unresolved).append((r, pid))
    text = comment + "raw_key\tpaper_id\ttitle\tyear\tchapter_tags\n"
    for r, pid in resolved:
        text += "\t".join([r["raw_key"], pid, papers[pid]["title"], papers[pid]["year"], ";".join(sorted(r["tags"]))]) + "\n"
    for r, _ in unresolved:
        text += r["raw_key"] + "\t\t\t\t\n"
    write(P("seeds.tsv"), text)

    depth = {}
    for _, pid in resolved:
        depth[pid] = 0
    fetched, edges, requests = set(), set(), 0
    frontier = sorted({pid for _, pid in resolved})
    for level in range(1, depth_max + 1):
        nxt = set()
        for t in frontier:
            cs = sorted(citers[t])
            requests += max(1, math.ceil(len(cs) / page_size))
            fetched.add(t)
            for c in cs:
                edges.add((c, t))
                if c not in depth:
                    depth[c] = level
                    nxt.add(c)
        frontier = sorted(nxt)
    net_nodes = sorted(depth)

    def graph_text(nodes, es):
        nt = comment + "id\ttitle\tyear\tdepth\tfully_resolved\n"
        for n in sorted(nodes):
            nt += "\t".join([n, papers[n]["title"], papers[n]["year"], str(depth[n]), "1" if n in fetched else "0"]) + "\n"
        et = comment + "citing_id\tcited_id\n"
        for u, v in sorted(es):
            et += u + "\t" + v + "\n"
        return nt, et

    def put_graph(rel, nodes, es):
        nt, et = graph_text(nodes, es)
        write(P(rel + "/nodes.tsv"), nt)
        write(P(rel + "/edges.tsv"), et)

    put_graph("network", net_nodes, edges)
    indeg = defaultdict(int)
    for u, v in edges:
        indeg[v] += 1
    positive = [n for n in net_nodes if indeg[n] > 0]
    completeness = sum(1 for n in positive if n in fetched) / len(positive) if positive else 1.0
    dump_json(P("network/stats.json"), {
        "seeds_resolved": len({pid for _, pid in resolved}), "seeds_unresolved": len(unresolved),
        "nodes_by_depth": [sum(1 for n in net_nodes if depth[n] == d) for d in range(3)],
        "nodes": len(net_nodes), "edges": len(edges), "requests_issued": requests,
        "budget_exhausted": False, "completeness": rnd(completeness),
        "unresolved_keys": [r["raw_key"] for r, _ in unresolved], "config_hash": chash})

    # component and core
    comps = components(net_nodes, edges)
    comp = sorted(comps, key=lambda c: (-len(c), min(c)))[0]
    comp_edges = {(u, v) for u, v in edges if u in comp and v in comp}
    put_graph("component", comp, comp_edges)
    dump_json(P("component.json"), {"nodes": len(comp), "edges": len(comp_edges), "network_nodes": len(net_nodes),
                                    "coverage": rnd(len(comp) / len(net_nodes)), "config_hash": chash})
    core = sorted(prune(comp, comp_edges))
    core_edges = sorted((u, v) for u, v in comp_edges if u in core and v in core)
    put_graph("core", core, core_edges)
    dump_json(P("core.json"), {"nodes": len(core), "edges": len(core_edges),
                               "pruned_nodes": len(comp) - len(core), "config_hash": chash})

    # symmetrize
    uedges = sorted({(min(u, v), max(u, v)) for u, v in core_edges})
    write(P("symmetrized.tsv"), comment + "source\ttarget\n" + "".join(u + "\t" + v + "\n" for u, v in uedges))

    # louvain (exhaustive optimum)
    label = best_partition(core, uedges, gamma)
    k = max(label.values()) + 1
    write(P("partition.tsv"), comment + "node_id\tcommunity_label\n" + "".join("%s\t%d\n" % (n, label[n]) for n in core))
    sizes = [sum(1 for n in core if label[n] == c) for c in range(k)]
    main, dropped = list(range(k)), 0
    while main and (dropped + sizes[main[-1]]) / len(core) < threshold:
        dropped += sizes[main.pop()]
    tdeg = defaultdict(int)
    for u, v in core_edges:
        tdeg[u] += 1
        tdeg[v] += 1
    summaries = []
    for c in sorted(range(k), key=lambda c: -sizes[c]):
        members = sorted((n for n in core if label[n] == c), key=lambda n: (-tdeg[n], n))[:top_k]
        summaries.append({"label": c, "size": sizes[c], "relative_size": rnd(sizes[c] / len(core)),
                          "top_degree_members": [{"id": n, "degree": tdeg[n], "title": papers[n]["title"]}
                                                 for n in members]})
    dump_json(P("communities.json"), {
        "community_count": k, "resolution": gamma, "rng_seed": cfg.get("rng_seed", 0),
        "modularity": rnd(q_undirected(core, uedges, label, gamma)),
        "directed_modularity": rnd(q_directed(core, core_edges, label)),
        "main_threshold": threshold, "main_communities": main, "summaries": summaries, "config_hash": chash})

    # sub-communities
    subs, text = [], comment + "node_id\tcommunity_label\tsub_label\n"
    for c in main:
        members = [n for n in core if label[n] == c]
        sub_edges = [(u, v) for u, v in uedges if label[u] == c and label[v] == c]
        sl = best_partition(members, sub_edges, gamma)
        sk = max(sl.values()) + 1
        subs.append({"label": c, "size": len(members), "sub_community_count": sk,
                     "sub_sizes": [sum(1 for n in members if sl[n] == s) for s in range(sk)],
                     "modularity": rnd(q_undirected(members, sub_edges, sl, gamma)) if sub_edges else None})
        text += "".join("%s\t%d\t%d\n" % (n, c, sl[n]) for n in members)
    dump_json(P("subcommunities.json"), {"communities": subs, "config_hash": chash})
    write(P("subpartition.tsv"), text)

    # metrics
    matrices = {}

    def put_matrix(name, rows_, cols, values, kind):
        t = comment + "row," + ",".join(cols) + "\n"
        for r, vals in zip(rows_, values):
            t += r + "," + ",".join(fixed(v) for v in vals) + "\n"
        write(P("metrics/" + name + ".csv"), t)
        matrices[name] = {"kind": kind, "row_labels": rows_, "col_labels": cols,
                          "values": [[rnd(v) for v in vals] for vals in values]}

    summary = {"main_communities": main}
    ms = [float(sizes[c]) for c in main]
    fit = None
    if len(ms) >= 2:
        ys = [math.log(s) for s in sorted(ms, reverse=True)]
        xs = [math.log(r) for r in range(1, len(ys) + 1)]
        n = len(xs)
        mx, my = sum(xs) / n, sum(ys) / n
        sxx = sum((x - mx) ** 2 for x in xs)
        sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
        syy = sum((y - my) ** 2 for y in ys)
        b = sxy / sxx
        a = my - b * mx
        ssr = sum((y - a - b * x) ** 2 for x, y in zip(xs, ys))
        r2 = 1 - ssr / syy if syy > 0 else 1.0
        se = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else 0.0
        adj = 1 - (1 - r2) * (n - 1) / (n - 2) if n > 2 else r2
        fit = {"exponent": rnd(b), "intercept": rnd(a), "std_error": rnd(se), "adjusted_r2": rnd(adj), "n_points": n}
    summary["rank_size"] = {"sizes": ms, "fit": fit}

    out_links = defaultdict(list)
    for u, v in core_edges:
        out_links[label[u]].append(label[v])
    selected = [c for c in main if out_links[c]][:ic_top]
    summary["inter_citation"] = {"selected": selected, "excluded_no_outgoing": [c for c in main if not out_links[c]]}
    if selected:
        vals = []
        for c in selected:
            links = out_links[c]
            vals.append([100.0 * sum(1 for d in links if d == s) / len(links) for s in selected] +
                        [100.0 * sum(1 for d in links if d not in selected) / len(links)])
        put_matrix("inter_citation", [str(c) for c in selected], [str(c) for c in selected] + ["others"], vals,
                   "inter_citation_percent")

    chapter_seeds = defaultdict(set)
    for r, pid in resolved:
        for t in r["tags"]:
            chapter_seeds[t].add(pid)
    cited_by = defaultdict(set)
    for u, v in core_edges:
        cited_by[v].add(u)
    chapters, subnets, counted = [], [], []
    for tag in sorted(chapter_seeds):
        in_core = sorted(s for s in chapter_seeds[tag] if s in core)
        reach, stack = set(), list(in_core)
        while stack:
            x = stack.pop()
            if x not in reach:
                reach.add(x)
                stack.extend(cited_by[x])
        cnt = [n for n in reach if depth[n] == 1 or not first_level]
        chapters.append({"chapter": tag, "seeds": len(chapter_seeds[tag]), "seeds_in_core": len(in_core),
                         "subnetwork_size": len(reach), "counted_nodes": len(cnt)})
        if reach:
            subnets.append((tag, reach))
        if cnt:
            counted.append((tag, cnt))
    if len(subnets) >= 2:
        vals = [[2.0 * len(a & b) / (len(a) + len(b)) for _, b in subnets] for _, a in subnets]
        put_matrix("jaccard", [t for t, _ in subnets], [t for t, _ in subnets], vals, "jaccard")
    herf = {}
    if counted:
        comp_rows = [[sum(1 for n in cnt if label[n] == c) / len(cnt) for c in range(k)] for _, cnt in counted]
        tags = [t for t, _ in counted]
        put_matrix("composition", tags, [str(c) for c in range(k)], comp_rows, "composition_prob")
        if len(comp_rows) >= 2:
            z = [[0.0] * k for _ in comp_rows]
            for c in range(k):
                col = [r[c] for r in comp_rows]
                mean = sum(col) / len(col)
                sd = math.sqrt(sum((x - mean) ** 2 for x in col) / len(col))
                for i, x in enumerate(col):
                    z[i][c] = 0.0 if sd <= 1e-12 * max(1.0, max(abs(v) for v in col)) else (x - mean) / sd
            put_matrix("composition_znorm", tags, [str(c) for c in range(k)], z, "composition_znorm")
        t = comment + "chapter,herfindahl\n"
        for tag, row in zip(tags, comp_rows):
            h = sum(p * p for p in row)
            herf[tag] = rnd(h)
            t += tag + "," + fixed(h) + "\n"
        write(P("metrics/herfindahl.csv"), t)
    for ch in chapters:
        ch["herfindahl"] = herf.get(ch["chapter"])
    summary["chapters"] = chapters
    summary["composition_level"] = cfg.get("composition_level", "first_level_only")

    profiles = load_profiles(os.path.join(os.path.dirname(__file__), "..", "..", "data", "langprofiles"))
    titles = [papers[n]["title"] for n in net_nodes if papers[n]["title"].strip()]
    counts = defaultdict(int)
    for t in titles:
        counts[detect(t, profiles)] += 1
    summary["language_shares"] = {c: rnd(v / len(titles)) for c, v in counts.items()}
    summary["language_titles"] = len(titles)
    summary["config_hash"] = chash
    dump_json(P("metrics/matrices.json"), {"matrices": matrices, "config_hash": chash})
    dump_json(P("metrics/summary.json"), summary)

    # export
    esc = lambda s: (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
                     .replace('"', "&quot;").replace("'", "&apos;"))
    g = '<?xml version="1.0" encoding="UTF-8"?>\n<!-- config_hash: %s -->\n' % chash
    g += '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">\n'
    g += '  <key id="title" for="node" attr.name="title" attr.type="string"/>\n'
    g += '  <key id="depth" for="node" attr.name="depth" attr.type="int"/>\n'
    g += '  <key id="community" for="node" attr.name="community" attr.type="int"/>\n'
    g += '  <graph id="G" edgedefault="directed">\n'
    for n in core:
        g += '    <node id="%s">\n' % esc(n)
        g += '      <data key="title">%s</data>\n' % esc(papers[n]["title"])
        g += '      <data key="depth">%d</data>\n' % depth[n]
        g += '      <data key="community">%d</data>\n' % label[n]
        g += '    </node>\n'
    for i, (u, v) in enumerate(core_edges):
        g += '    <edge id="e%d" source="%s" target="%s"/>\n' % (i, esc(u), esc(v))
    g += '  </graph>\n</graphml>\n'
    write(P("export/core.graphml"), g)
    write(P("export/core.edgelist.tsv"), comment + "citing_id\tcited_id\n" + "".join(u + "\t" + v + "\n" for u, v in core_edges))


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
