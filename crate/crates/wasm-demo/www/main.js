import init, { Demo, costModel, defaultCostInputs } from "./pkg/fusekit_wasm.js";

const $ = (id) => document.getElementById(id);
const SVG = "http://www.w3.org/2000/svg";
const COLORS = { minmax: "#1f77b4", zscore: "#d62728", percentile: "#2ca02c", bm25: "#999", dense: "#555" };

let demo = null;

function showError(e) {
  $("error").textContent = e ? String(e.message ?? e) : "";
}

function svgEl(tag, attrs, parent) {
  const el = document.createElementNS(SVG, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  if (parent) parent.appendChild(el);
  return el;
}

function label(parent, x, y, text, anchor = "start") {
  const el = svgEl("text", { x, y, "text-anchor": anchor }, parent);
  el.textContent = text;
  return el;
}

function drawSweep(sweep) {
  const svg = $("sweep");
  svg.replaceChildren();
  const w = +svg.getAttribute("width"), h = +svg.getAttribute("height");
  const pad = { l: 40, r: 90, t: 10, b: 30 };
  const x = (a) => pad.l + a * (w - pad.l - pad.r);
  const y = (v) => h - pad.b - v * (h - pad.t - pad.b);
  svgEl("line", { x1: x(0), y1: y(0), x2: x(1), y2: y(0), stroke: "#000" }, svg);
  svgEl("line", { x1: x(0), y1: y(0), x2: x(0), y2: y(1), stroke: "#000" }, svg);
  for (const t of [0, 0.5, 1]) {
    label(svg, x(t), h - pad.b + 14, t.toFixed(1), "middle");
    label(svg, pad.l - 4, y(t) + 4, t.toFixed(1), "end");
  }
  label(svg, x(0.5), h - 2, "α (BM25 weight)", "middle");
  for (const name of ["bm25", "dense"]) {
    const v = sweep.baselines[name];
    svgEl("line", { x1: x(0), x2: x(1), y1: y(v), y2: y(v), stroke: COLORS[name], "stroke-dasharray": "4 3" }, svg);
    label(svg, x(1) + 4, y(v) + 4, `${name} ${v.toFixed(2)}`);
  }
  let row = 0;
  for (const [norm, curve] of Object.entries(sweep.nsf)) {
    const pts = curve.map((v, i) => `${x(sweep.alphas[i])},${y(v)}`).join(" ");
    svgEl("polyline", { points: pts, fill: "none", stroke: COLORS[norm], "stroke-width": 2 }, svg);
    label(svg, x(1) + 4, pad.t + 12 + 14 * row++, norm).setAttribute("fill", COLORS[norm]);
  }
  const rows = Object.entries(sweep.baselines)
    .map(([k, v]) => `<tr><td>${k}</td><td class="num">${v.toFixed(3)}</td></tr>`)
    .join("");
  $("baselines").innerHTML = `<tr><th>system</th><th>R@10</th></tr>${rows}`;
}

function escape(s) {
  return s.replace(/[&<>]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;" })[c]);
}

function renderQuery() {
  if (!demo) return;
  const alpha = +$("alpha").value;
  $("alpha-value").textContent = alpha.toFixed(2);
  try {
    const view = JSON.parse(demo.inspect($("query").value, alpha, $("norm").value));
    $("query-text").textContent = `“${view.text}”`;
    $("columns").innerHTML = view.columns
      .map((c) => {
        const rows = c.hits
          .map(
            (hit, i) =>
              `<tr class="${hit.relevant ? "rel" : ""}"><td>${i + 1}</td><td>${hit.doc}</td>` +
              `<td class="num">${hit.score.toFixed(3)}</td><td class="muted">${escape(hit.snippet)}</td></tr>`,
          )
          .join("");
        return `<div class="col"><b>${c.name}</b> <span class="muted">R@10 ${c.recall.toFixed(2)}</span>
          <table>${rows}</table></div>`;
      })
      .join("");
    showError(null);
  } catch (e) {
    showError(e);
  }
}

function drawHistogram(h) {
  const w = 460, ht = 180, pad = 24;
  const svg = svgEl("svg", { width: w, height: ht });
  const max = Math.max(1, ...h.bins.map((b) => b.count));
  const lo = h.bins[0].left, hi = h.bins[h.bins.length - 1].right;
  const span = hi > lo ? hi - lo : 1;
  const x = (v) => pad + ((v - lo) / span) * (w - 2 * pad);
  const y = (c) => ht - pad - (c / max) * (ht - 2 * pad);
  for (const b of h.bins) {
    svgEl("rect", {
      x: x(b.left), y: y(b.count), width: Math.max(1, x(b.right) - x(b.left) - 1),
      height: ht - pad - y(b.count), fill: COLORS[h.system],
    }, svg);
  }
  for (const [name, v] of [["Q1", h.q1], ["med", h.median], ["Q3", h.q3]]) {
    svgEl("line", { x1: x(v), x2: x(v), y1: pad - 6, y2: ht - pad, stroke: "#d62728", "stroke-dasharray": "3 2" }, svg);
    label(svg, x(v), pad - 8, name, "middle");
  }
  label(svg, pad, ht - 6, lo.toFixed(2));
  label(svg, w - pad, ht - 6, hi.toFixed(2), "end");
  const div = document.createElement("div");
  div.className = "col";
  div.innerHTML = `<b>${h.system}</b>`;
  div.appendChild(svg);
  return div;
}

function renderHistograms() {
  if (!demo) return;
  try {
    const hists = JSON.parse(demo.histograms($("hist-norm").value, +$("bins").value));
    $("hists").replaceChildren(...hists.map(drawHistogram));
    showError(null);
  } catch (e) {
    showError(e);
  }
}

function renderPercentile() {
  if (!demo) return;
  try {
    const system = $("pct-system").value;
    const [lo, hi] = demo.scoreRange(system);
    const p = demo.percentile(system, +$("pct-score").value);
    $("pct-out").textContent = `= ${(100 * p).toFixed(1)}th percentile (raw range ${lo.toFixed(2)} to ${hi.toFixed(2)})`;
    showError(null);
  } catch (e) {
    showError(e);
  }
}

function generate() {
  $("status").textContent = "building indexes...";
  setTimeout(() => {
    try {
      const t0 = performance.now();
      demo?.free();
      demo = new Demo(+$("seed").value >>> 0);
      const queries = JSON.parse(demo.queries());
      $("query").innerHTML = queries
        .map((q) => `<option value="${q.id}">${q.id}: ${escape(q.text)}</option>`)
        .join("");
      drawSweep(JSON.parse(demo.sweep(0.05)));
      renderQuery();
      renderHistograms();
      renderPercentile();
      $("status").textContent = `done in ${(performance.now() - t0).toFixed(0)} ms`;
    } catch (e) {
      showError(e);
      $("status").textContent = "";
    }
  }, 0);
}

function sci(x) {
  return x.toExponential(1);
}

function renderCost() {
  const inputs = {};
  for (const el of $("cost").querySelectorAll("input")) inputs[el.name] = +el.value;
  try {
    const r = JSON.parse(costModel(JSON.stringify(inputs)));
    $("flops").innerHTML =
      "<tr><th>approach</th><th>FLOPs per query</th></tr>" +
      Object.entries(r.flops).map(([k, v]) => `<tr><td>${k}</td><td class="num">${sci(v)}</td></tr>`).join("");
    $("sizes").innerHTML =
      "<tr><th>dim</th><th>flat index</th></tr>" +
      r.index.map((row) => `<tr><td>${row.dim}</td><td class="num">${row.size.mib.toFixed(1)} MiB</td></tr>`).join("");
    showError(null);
  } catch (e) {
    showError(e);
  }
}

function buildCostForm() {
  const defaults = JSON.parse(defaultCostInputs());
  $("cost").innerHTML = Object.entries(defaults)
    .map(([k, v]) => `<label>${k} <input type="number" step="any" name="${k}" value="${v}"></label>`)
    .join("");
  $("cost").addEventListener("input", renderCost);
  renderCost();
}

await init();
buildCostForm();
$("generate").addEventListener("click", generate);
for (const id of ["alpha", "query", "norm"]) $(id).addEventListener("input", renderQuery);
for (const id of ["hist-norm", "bins"]) $(id).addEventListener("input", renderHistograms);
for (const id of ["pct-system", "pct-score"]) $(id).addEventListener("input", renderPercentile);
generate();
