import init, { apb, thm, tpp } from "./pkg/lowbit_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function show(el, fn) {
  try {
    el.classList.remove("error");
    fn();
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e.message ?? e);
  }
}

function drawCurve(canvas, v) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const xs = v.curve.map((p) => p[0]);
  const ys = v.curve.map((p) => p[1]);
  const xmax = Math.max(...xs.map(Math.abs));
  const ymax = Math.max(...ys.map(Math.abs), 1e-9);
  const px = (x) => ((x + xmax) / (2 * xmax)) * (w - 20) + 10;
  const py = (y) => h / 2 - (y / ymax) * (h / 2 - 12);

  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(0, h / 2); ctx.lineTo(w, h / 2);
  ctx.moveTo(px(0), 0); ctx.lineTo(px(0), h);
  ctx.stroke();

  // binarization interval
  const t = v.alpha + v.delta;
  ctx.fillStyle = "rgba(60, 120, 220, 0.08)";
  ctx.fillRect(px(-t), 0, px(t) - px(-t), h);

  ctx.strokeStyle = "#36c";
  ctx.lineWidth = 2;
  ctx.beginPath();
  v.curve.forEach(([x, y], i) => (i ? ctx.lineTo(px(x), py(y)) : ctx.moveTo(px(x), py(y))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function updateApb() {
  const out = $("apb-out");
  show(out, () => {
    const v = JSON.parse(apb(num("alpha"), num("delta"), num("std"), num("samples"), num("seed")));
    drawCurve($("curve"), v);
    out.textContent = [
      `α = ${v.alpha.toFixed(4)}  δ = ${v.delta.toFixed(4)}  (init: α = ${v.suggested_alpha.toFixed(4)}, δ = ${v.suggested_delta.toFixed(4)})`,
      `kept at full precision: ${v.s} of ${v.n} (${((100 * v.s) / v.n).toFixed(3)} %)`,
      `position bits ${v.b_p}; average bits per weight ${v.avg_bits_exact.toFixed(4)} exact, ${v.avg_bits_approx.toFixed(4)} with a full bitmap`,
    ].join("\n");
  });
}

function updateThm() {
  const out = $("thm-out");
  show(out, () => {
    const v = JSON.parse(thm($("levels").value, $("signs").value));
    out.textContent = [
      `t        ${v.t}`,
      `h        ${v.h}`,
      `m        ${v.m}`,
      `centered ${v.centered.join(" ")}`,
      ``,
      `mbm(w, t, m) = ${v.mbm_t}   mbm(w, h, m̄) = ${v.mbm_h}`,
      `w · centered = 3/2·${v.mbm_t} + 1/2·${v.mbm_h} = ${v.centered_dot}`,
      `w · levels   = ${v.kernel_dot} (kernel), ${v.dense_dot} (dense)`,
    ].join("\n");
  });
}

function updateTpp() {
  const out = $("tpp-out");
  show(out, () => {
    const rows = JSON.parse(tpp(num("clock")));
    const head = "<tr><th>precision</th><th>values/cycle</th><th>cost vs 1/1</th><th>vs fp32</th><th>peak GUPS</th></tr>";
    out.innerHTML = head + rows.map((r) =>
      `<tr><td>${r.precision}</td><td>${r.values_per_cycle.toFixed(2)}</td>` +
      `<td>${r.cost_vs_1x1 ?? "-"}</td><td>${r.speedup_vs_fp32.toFixed(2)}x</td>` +
      `<td>${r.peak_gups.toFixed(1)}</td></tr>`).join("");
  });
}

await init();
$("status").textContent = "";
for (const id of ["alpha", "delta", "std", "samples", "seed"]) $(id).addEventListener("input", updateApb);
for (const id of ["levels", "signs"]) $(id).addEventListener("input", updateThm);
$("clock").addEventListener("input", updateTpp);
updateApb();
updateThm();
updateTpp();
