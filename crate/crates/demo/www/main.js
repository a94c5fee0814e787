import init, { cluster, consensus, metrics } from "./pkg/grouprec_demo.js";

const $ = (id) => document.getElementById(id);

function table(headers, rows) {
  const head = `<tr>${headers.map((h) => `<th>${h}</th>`).join("")}</tr>`;
  const body = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table>${head}${body}</table>`;
}

function guarded(out, f) {
  try {
    out.innerHTML = f();
  } catch (e) {
    out.innerHTML = `<p class="error">${e}</p>`;
  }
}

function showConsensus() {
  guarded($("consensus-out"), () => {
    const rows = JSON.parse(consensus($("profiles").value, +$("k").value, +$("a").value, +$("c").value));
    return table(
      ["method", "items", "per user", "group score"],
      rows.map((r) => [
        r.method,
        r.items.join(" "),
        Object.entries(r.per_user).map(([u, s]) => `${u}=${s}`).join(", "),
        r.group_score.toFixed(4),
      ]),
    );
  });
}

function showClusters() {
  guarded($("cluster-out"), () => {
    const r = JSON.parse(cluster($("texts").value, +$("kmin").value, +$("kmax").value, +$("seed").value));
    const lines = $("texts").value.split("\n").map((l) => l.trim()).filter((l) => l);
    const sil = table(["k", "mean silhouette"], Object.entries(r.silhouette).map(([k, s]) => [k, s.toFixed(4)]));
    return `<p>chosen k = ${r.chosen_k}</p>${sil}` + table(["cluster", "review"], lines.map((l, i) => [r.labels[i], l]));
  });
}

function showMetrics() {
  guarded($("metrics-out"), () => {
    const r = JSON.parse(metrics($("pred").value, $("truth").value));
    const s = r.standard;
    return table(
      ["tp", "fn", "fp", "tn", "RI", "ARI", "precision", "recall", "F"],
      [[s.tp, s.fn, s.fp, s.tn, s.rand_index, s.ari, s.precision, s.recall, s.f_measure]],
    ) + `<p>With recall taken as tp/(tp+tn): recall ${r.over_agreements.recall}, F ${r.over_agreements.f_measure}</p>`;
  });
}

await init();
$("status").textContent = "Ready.";
$("run-consensus").onclick = showConsensus;
$("run-cluster").onclick = showClusters;
$("run-metrics").onclick = showMetrics;
showConsensus();
showClusters();
showMetrics();
