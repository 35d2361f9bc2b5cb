import init, { geometry, trace_split, sticky_walk } from "./pkg/traceform_web.js";

// Grid step of the sticky walk per depth; collapsed gaps must land on nodes.
const WALK_H = { 1: 1 / 64, 2: 1 / 64, 3: 1 / 256 };

const $ = (id) => document.getElementById(id);

function frame(canvas, xr, yr, pad = 40) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  const sx = (x) => pad + ((x - xr[0]) / (xr[1] - xr[0])) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - yr[0]) / (yr[1] - yr[0])) * (h - 2 * pad);
  ctx.strokeStyle = "#888";
  ctx.lineWidth = 1;
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "12px sans-serif";
  ctx.fillText(String(xr[0]), sx(xr[0]) - 4, h - pad + 16);
  ctx.fillText(String(+xr[1].toFixed(3)), sx(xr[1]) - 10, h - pad + 16);
  ctx.fillText(String(+yr[0].toFixed(3)), 4, sy(yr[0]) + 4);
  ctx.fillText(String(+yr[1].toFixed(3)), 4, sy(yr[1]) + 4);
  return { ctx, sx, sy, top: pad, bottom: h - pad };
}

function shade(f, intervals, color) {
  f.ctx.fillStyle = color;
  for (const [a, b] of intervals) {
    f.ctx.fillRect(f.sx(a), f.top, f.sx(b) - f.sx(a), f.bottom - f.top);
  }
}

function line(f, xs, ys, color, width = 2) {
  f.ctx.strokeStyle = color;
  f.ctx.lineWidth = width;
  f.ctx.beginPath();
  xs.forEach((x, i) => (i ? f.ctx.lineTo(f.sx(x), f.sy(ys[i])) : f.ctx.moveTo(f.sx(x), f.sy(ys[i]))));
  f.ctx.stroke();
}

function report(id, fn) {
  const out = $(id);
  try {
    out.classList.remove("error");
    out.textContent = fn();
  } catch (e) {
    out.classList.add("error");
    out.textContent = String(e.message ?? e);
  }
}

function drawGeometry() {
  const depth = +$("geo-depth").value;
  $("geo-depth-val").textContent = depth;
  report("geo-out", () => {
    const g = JSON.parse(geometry(depth, 801));
    const f = frame($("geo"), [0, 1], [0, 1]);
    shade(f, g.components, "#e4e4e4");
    line(f, g.x, g.s, "#c33");
    line(f, g.x, g.j, "#36c");
    return `${g.components.length} gaps, m(G) = ${g.g_mass}, m(F) = ${1 - g.g_mass}`;
  });
}

function drawTrace() {
  const depth = +$("tr-depth").value;
  $("tr-depth-val").textContent = depth;
  report("tr-out", () => {
    const r = JSON.parse(trace_split(depth, $("tr-shape").value, 16));
    const lo = Math.min(...r.extension_y), hi = Math.max(...r.extension_y);
    const f = frame($("tr"), [0, 1], [lo, hi > lo ? hi : lo + 1]);
    shade(f, r.f_components, "#eef3fb");
    line(f, r.extension_x, r.extension_y, "#333");
    return [
      `local ${r.local.toPrecision(8)}`,
      `jump  ${r.jump.toPrecision(8)}`,
      `total ${r.value.toPrecision(8)}`,
      `energy of the extension ${r.extension_energy.toPrecision(8)}`,
    ].join("\n");
  });
}

function runWalk() {
  const depth = +$("sw-depth").value;
  report("sw-out", () => {
    const r = JSON.parse(sticky_walk(depth, WALK_H[depth], +$("sw-horizon").value, BigInt($("sw-seed").value)));
    const f = frame($("sw"), [0, r.t[r.t.length - 1]], [r.carrier[0], r.carrier[1]]);
    f.ctx.strokeStyle = "#c33";
    f.ctx.setLineDash([4, 4]);
    for (const [p] of r.atoms) {
      f.ctx.beginPath();
      f.ctx.moveTo(f.sx(0), f.sy(p));
      f.ctx.lineTo(f.sx(r.t[r.t.length - 1]), f.sy(p));
      f.ctx.stroke();
    }
    f.ctx.setLineDash([]);
    line(f, r.t, r.y, "#333", 1);
    const rows = r.atoms.map(([p, m], i) => {
      const o = r.occupation[i];
      return `p = ${p.toFixed(5)}  mass ${m.toFixed(5)}  time ${o.estimate.toFixed(4)} ± ${o.std_error.toFixed(4)}  expected ${r.stationary[i].toFixed(4)}`;
    });
    const warn = r.occupation.find((o) => o.warning);
    return rows.join("\n") + (warn ? `\n${warn.warning}` : "");
  });
}

await init();
$("geo-depth").addEventListener("input", drawGeometry);
$("tr-depth").addEventListener("input", drawTrace);
$("tr-shape").addEventListener("change", drawTrace);
$("sw-run").addEventListener("click", runWalk);
drawGeometry();
drawTrace();
runWalk();
