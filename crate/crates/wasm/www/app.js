import init, { cluster, slice_points, retract_check } from "./pkg/layerscope_wasm.js";

const $ = (id) => document.getElementById(id);
const palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"];

const state = { points: [], clustering: null, colors: [], highlight: null, sample: new Set() };

function parseCsv(text) {
  return text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l && !l.startsWith("#"))
    .map((l) => l.split(",").map((s) => s.trim()))
    .filter((row) => row.length >= 2 && !isNaN(parseFloat(row[1])))
    .map(([label, x, y]) => ({ label, x: parseFloat(x), y: y === undefined ? 0 : parseFloat(y) }));
}

function frame() {
  const xs = state.points.map((p) => p.x), ys = state.points.map((p) => p.y);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const c = $("plot"), pad = 40;
  const scale = Math.min((c.width - 2 * pad) / (x1 - x0 || 1), (c.height - 2 * pad) / (y1 - y0 || 1));
  return (p) => [pad + (p.x - x0) * scale, c.height - pad - (p.y - y0) * scale];
}

function draw() {
  const c = $("plot"), ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  if (!state.points.length) return;
  const at = frame();
  state.points.forEach((p, i) => {
    const [x, y] = at(p);
    const hit = state.highlight && state.highlight.includes(i);
    ctx.beginPath();
    ctx.arc(x, y, hit ? 9 : 6, 0, 2 * Math.PI);
    ctx.fillStyle = state.colors[i] ?? "#999";
    ctx.fill();
    if (state.sample.has(i)) {
      ctx.lineWidth = 3;
      ctx.strokeStyle = "#000";
      ctx.stroke();
    }
    ctx.fillStyle = "#333";
    ctx.fillText(p.label, x + 9, y - 7);
  });
}

function show(json) {
  $("raw").textContent = json;
}

function fail(e) {
  $("raw").textContent = "error: " + e;
}

function recolor() {
  const h = state.clustering;
  state.colors = [];
  if (!h) return draw();
  const s = parseFloat($("scale").value), k = parseInt($("degree").value, 10);
  $("scale-value").textContent = s.toFixed(3);
  // Step evaluation: the last cell whose scale is at most s, at degree k.
  let best = null;
  for (const cell of h.cells) {
    const [cs, ck] = cell.point;
    if (ck === k && cs <= s && (!best || cs >= best.point[0])) best = cell;
  }
  (best ? best.clusters : []).forEach((members, j) => members.forEach((i) => (state.colors[i] = palette[j % palette.length])));
  $("cluster-summary").textContent = best
    ? `${best.clusters.length} cluster(s) at (s, k) = (${s.toFixed(3)}, ${k}); ${h.layer_points.length} global layer points`
    : "no clusters here";
  draw();
}

function runCluster() {
  state.points = parseCsv($("csv").value);
  try {
    const json = cluster($("csv").value, $("metric").value, parseInt($("kmax").value, 10));
    state.clustering = JSON.parse(json);
    const scales = state.clustering.axes[0].values;
    $("scale").max = Math.max(...scales) * 1.05 || 1;
    $("degree").max = $("kmax").value;
    show(json);
  } catch (e) {
    state.clustering = null;
    fail(e);
  }
  recolor();
}

function runPoints() {
  state.points = parseCsv($("csv").value);
  const list = $("points");
  list.innerHTML = "";
  try {
    const json = slice_points($("csv").value, $("metric").value, parseInt($("slice-k").value, 10), $("branch").checked);
    for (const p of JSON.parse(json).points) {
      const li = document.createElement("li");
      li.textContent = `s = ${p.point[0]}: {${p.labels.join(", ")}}`;
      li.onclick = () => {
        for (const other of list.children) other.classList.remove("on");
        li.classList.add("on");
        state.highlight = p.cluster;
        draw();
      };
      list.appendChild(li);
    }
    show(json);
  } catch (e) {
    fail(e);
  }
  draw();
}

function runRetract() {
  state.points = parseCsv($("csv").value);
  const sample = [...state.sample].sort((a, b) => a - b).join(",");
  try {
    const json = retract_check(
      $("csv").value, $("metric").value, sample, parseInt($("rk").value, 10),
      $("rc").value, $("reps").value, $("rdelta").value,
    );
    const r = JSON.parse(json);
    const cond = Object.entries(r.conditions).map(([k, v]) => `${k}: ${v ? "yes" : "no"}`).join(", ");
    const p = r.parameters;
    $("retract-summary").innerHTML =
      `<p class="${r.outcome}"><b>${r.outcome.replace(/_/g, " ")}</b> (exit ${r.exit_code})</p>` +
      `<p>c = ${p.c}, ε = ${p.epsilon}, δ = ${p.delta}, h = ${r.stats.h}, N<sub>k</sub> = ${r.stats.n_k}</p><p>${cond}</p>`;
    show(json);
  } catch (e) {
    $("retract-summary").textContent = "";
    fail(e);
  }
}

$("plot").addEventListener("click", (ev) => {
  if (!state.points.length) state.points = parseCsv($("csv").value);
  const rect = ev.target.getBoundingClientRect();
  const [mx, my] = [ev.clientX - rect.left, ev.clientY - rect.top];
  const at = frame();
  let hit = -1, best = 15;
  state.points.forEach((p, i) => {
    const [x, y] = at(p);
    const d = Math.hypot(x - mx, y - my);
    if (d < best) [hit, best] = [i, d];
  });
  if (hit < 0) return;
  state.sample.has(hit) ? state.sample.delete(hit) : state.sample.add(hit);
  draw();
});

await init();
$("run-cluster").onclick = runCluster;
$("run-points").onclick = runPoints;
$("run-retract").onclick = runRetract;
$("scale").oninput = recolor;
$("degree").oninput = recolor;
$("csv").oninput = () => {
  state.sample.clear();
  state.highlight = null;
  state.points = parseCsv($("csv").value);
  draw();
};
[0, 2, 4].forEach((i) => state.sample.add(i));
runCluster();
