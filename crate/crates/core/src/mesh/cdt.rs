//! Constrained Delaunay triangulation by Bowyer–Watson insertion inside a
//! bounding triangle, with Ruppert-style refinement against a size field.

use std::collections::{HashMap, VecDeque};

use robust::Coord;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArc, Point};

pub(crate) const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct Tri {
    v: [usize; 3],
    n: [usize; 3],
    alive: bool,
    inside: bool,
}

/// Directed boundary piece `from → to` with the domain on its left.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Segment {
    pub from: usize,
    pub to: usize,
    pub arc: usize,
    pub s_from: f64,
    pub s_to: f64,
}

pub(crate) struct RefineParams<'a> {
    pub size: &'a (dyn Fn(Point) -> f64 + Sync),
    /// A triangle is too big when its longest edge exceeds this multiple of
    /// the local size.
    pub size_factor: f64,
    /// Circumradius to shortest edge bound.
    pub quality_bound: f64,
    /// Input corners with small angles: vertex id and shell scale.
    pub acute: Vec<(usize, f64)>,
    pub node_cap: usize,
    pub arcs: &'a [BoundaryArc],
}

pub(crate) struct Cdt {
    pts: Vec<Point>,
    tris: Vec<Tri>,
    free: Vec<usize>,
    vtri: Vec<usize>,
    segs: HashMap<(usize, usize), Segment>,
    on_boundary: Vec<bool>,
    mark: Vec<u32>,
    stamp: u32,
    last: usize,
    rng: u64,
}

enum Located {
    Inside(usize),
    Vertex(usize),
    Blocked(usize, usize),
}

fn c(p: Point) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn circumcenter(a: Point, b: Point, cc: Point) -> Point {
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (cc.x - a.x, cc.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    Point::new(a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d)
}

impl Cdt {
    pub fn new(lo: Point, hi: Point) -> Self {
        let d = (hi.x - lo.x).max(hi.y - lo.y).max(1e-300);
        let cx = 0.5 * (lo.x + hi.x);
        let cy = 0.5 * (lo.y + hi.y);
        let pts = vec![
            Point::new(cx - 40.0 * d, cy - 30.0 * d),
            Point::new(cx + 40.0 * d, cy - 30.0 * d),
            Point::new(cx, cy + 50.0 * d),
        ];
        let tris = vec![Tri { v: [0, 1, 2], n: [NONE; 3], alive: true, inside: false }];
        Cdt {
            pts,
            tris,
            free: Vec::new(),
            vtri: vec![0, 0, 0],
            segs: HashMap::new(),
            on_boundary: vec![false; 3],
            mark: vec![0],
            stamp: 0,
            last: 0,
            rng: 0x9E37_79B9_7F4A_7C15,
        }
    }

    pub fn num_points(&self) -> usize {
        self.pts.len() - 3
    }

    pub fn point(&self, v: usize) -> Point {
        self.pts[v]
    }

    fn next_rand(&mut self) -> u64 {
        self.rng ^= self.rng << 13;
        self.rng ^= self.rng >> 7;
        self.rng ^= self.rng << 17;
        self.rng
    }

    fn orient(&self, a: usize, b: usize, p: Point) -> f64 {
        robust::orient2d(c(self.pts[a]), c(self.pts[b]), c(p))
    }

    fn edge(&self, t: usize, i: usize) -> (usize, usize) {
        let v = self.tris[t].v;
        (v[(i + 1) % 3], v[(i + 2) % 3])
    }

    pub fn is_segment(&self, a: usize, b: usize) -> bool {
        self.segs.contains_key(&key(a, b))
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.segs.values()
    }

    fn in_circle(&self, t: usize, p: Point) -> bool {
        let v = self.tris[t].v;
        robust::incircle(c(self.pts[v[0]]), c(self.pts[v[1]]), c(self.pts[v[2]]), c(p)) > 0.0
    }

    fn any_alive(&self) -> usize {
        if self.tris[self.last].alive {
            return self.last;
        }
        self.tris.iter().position(|t| t.alive).expect("triangulation is never empty")
    }

    fn locate(&mut self, p: Point, start: usize, respect_segments: bool) -> Located {
        let mut t =
            if start != NONE && start < self.tris.len() && self.tris[start].alive { start } else { self.any_alive() };
        let limit = 4 * self.tris.len() + 100;
        'walk: for _ in 0..limit {
            let r = (self.next_rand() % 3) as usize;
            for k in 0..3 {
                let i = (r + k) % 3;
                let (a, b) = self.edge(t, i);
                if self.orient(a, b, p) < 0.0 {
                    if respect_segments && self.is_segment(a, b) {
                        return Located::Blocked(a, b);
                    }
                    let nb = self.tris[t].n[i];
                    if nb == NONE {
                        break 'walk;
                    }
                    t = nb;
                    continue 'walk;
                }
            }
            for &v in &self.tris[t].v {
                if self.pts[v] == p {
                    return Located::Vertex(v);
                }
            }
            return Located::Inside(t);
        }
        // fall back to exhaustive search
        for (ti, tri) in self.tris.iter().enumerate() {
            if tri.alive
                && (0..3).all(|i| {
                    let (a, b) = (tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]);
                    robust::orient2d(c(self.pts[a]), c(self.pts[b]), c(p)) >= 0.0
                })
            {
                return Located::Inside(ti);
            }
        }
        Located::Inside(self.any_alive())
    }

    fn bump_stamp(&mut self) -> u32 {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
        if self.mark.len() < self.tris.len() {
            self.mark.resize(self.tris.len(), 0);
        }
        self.stamp
    }

    /// Triangles whose circumcircle contains `p`, reachable from `t0` without
    /// crossing segments, trimmed to a region star-shaped from `p`.
    #[allow(clippy::type_complexity)]
    fn cavity(
        &mut self,
        p: Point,
        t0: usize,
        seeds: &[usize],
    ) -> Result<(Vec<usize>, Vec<(usize, usize, usize, usize)>)> {
        let st = self.bump_stamp();
        let mut stack = vec![t0];
        stack.extend_from_slice(seeds);
        for &t in &stack {
            self.mark[t] = st;
        }
        let mut list = Vec::new();
        while let Some(t) = stack.pop() {
            list.push(t);
            for i in 0..3 {
                let nb = self.tris[t].n[i];
                if nb == NONE || self.mark[nb] == st {
                    continue;
                }
                let (a, b) = self.edge(t, i);
                if self.is_segment(a, b) {
                    continue;
                }
                if self.in_circle(nb, p) {
                    self.mark[nb] = st;
                    stack.push(nb);
                }
            }
        }
        loop {
            let mut boundary = Vec::new();
            let mut removed = false;
            for &t in &list {
                if self.mark[t] != st {
                    continue;
                }
                for i in 0..3 {
                    let nb = self.tris[t].n[i];
                    if nb != NONE && self.mark[nb] == st {
                        continue;
                    }
                    let (a, b) = self.edge(t, i);
                    if self.orient(a, b, p) <= 0.0 {
                        if t == t0 || seeds.contains(&t) {
                            return Err(Error::InvalidMesh("insertion point outside its cavity".into()));
                        }
                        self.mark[t] = st.wrapping_sub(1);
                        removed = true;
                        break;
                    }
                    boundary.push((a, b, nb, t));
                }
            }
            if !removed {
                list.retain(|&t| self.mark[t] == st);
                return Ok((list, boundary));
            }
        }
    }

    fn alloc(&mut self, tri: Tri) -> usize {
        if let Some(i) = self.free.pop() {
            self.tris[i] = tri;
            i
        } else {
            self.tris.push(tri);
            self.mark.push(0);
            self.tris.len() - 1
        }
    }

    fn insert_with(&mut self, p: Point, t0: usize, seeds: &[usize]) -> Result<(usize, Vec<usize>)> {
        let (cav, boundary) = self.cavity(p, t0, seeds)?;
        let vid = self.pts.len();
        self.pts.push(p);
        self.vtri.push(NONE);
        self.on_boundary.push(false);
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, outer, owner) in &boundary {
            let inside = self.tris[owner].inside;
            let t = self.alloc(Tri { v: [a, b, vid], n: [NONE, NONE, outer], alive: true, inside });
            if outer != NONE {
                let on = &mut self.tris[outer].n;
                for j in 0..3 {
                    if on[j] == owner {
                        on[j] = t;
                    }
                }
            }
            created.push(t);
        }
        // link the fan around the new vertex
        let mut by_first: HashMap<usize, usize> = HashMap::with_capacity(created.len());
        let mut by_second: HashMap<usize, usize> = HashMap::with_capacity(created.len());
        for &t in &created {
            by_first.insert(self.tris[t].v[0], t);
            by_second.insert(self.tris[t].v[1], t);
        }
        for &t in &created {
            let [a, b, _] = self.tris[t].v;
            self.tris[t].n[0] = by_first.get(&b).copied().unwrap_or(NONE);
            self.tris[t].n[1] = by_second.get(&a).copied().unwrap_or(NONE);
        }
        for &t in &cav {
            self.tris[t].alive = false;
            self.free.push(t);
        }
        for &t in &created {
            for &v in &self.tris[t].v {
                self.vtri[v] = t;
            }
            self.fix_flag(t);
        }
        self.last = *created.last().unwrap_or(&self.last);
        Ok((vid, created))
    }

    fn fix_flag(&mut self, t: usize) {
        for i in 0..3 {
            let (a, b) = self.edge(t, i);
            if let Some(s) = self.segs.get(&key(a, b)) {
                self.tris[t].inside = s.from == a;
                return;
            }
        }
    }

    /// Inserts a free point; returns its id.
    pub fn insert(&mut self, p: Point) -> Result<usize> {
        let start = self.last;
        match self.locate(p, start, false) {
            Located::Vertex(v) => Ok(v),
            Located::Inside(t) => Ok(self.insert_with(p, t, &[])?.0),
            Located::Blocked(..) => unreachable!(),
        }
    }

    pub fn mark_boundary(&mut self, v: usize) {
        self.on_boundary[v] = true;
    }

    /// Triangle containing edge (a, b) and the local index of that edge.
    fn find_edge(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        let start = self.vtri[a];
        if start == NONE {
            return None;
        }
        let mut t = start;
        for _ in 0..10_000 {
            let v = self.tris[t].v;
            let ia = v.iter().position(|&x| x == a)?;
            let b1 = v[(ia + 1) % 3];
            let b2 = v[(ia + 2) % 3];
            if b1 == b {
                return Some((t, (ia + 2) % 3));
            }
            if b2 == b {
                return Some((t, (ia + 1) % 3));
            }
            // rotate clockwise around a: cross edge (a, b1)
            t = self.tris[t].n[(ia + 2) % 3];
            if t == NONE || t == start {
                return None;
            }
        }
        None
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.find_edge(a, b).is_some()
    }

    fn incident(&self, v: usize) -> Vec<usize> {
        let start = self.vtri[v];
        let mut out = vec![];
        let mut t = start;
        for _ in 0..10_000 {
            out.push(t);
            let tv = self.tris[t].v;
            let iv = tv.iter().position(|&x| x == v).unwrap();
            t = self.tris[t].n[(iv + 2) % 3];
            if t == NONE || t == start {
                break;
            }
        }
        out
    }

    pub fn add_segment(&mut self, seg: Segment) {
        self.segs.insert(key(seg.from, seg.to), seg);
        self.on_boundary[seg.from] = true;
        self.on_boundary[seg.to] = true;
    }

    /// Splits a segment at arc parameter `s`; the new point is first placed
    /// on the chord and then moved onto the arc.
    pub fn split_segment(&mut self, a: usize, b: usize, s: f64, arcs: &[BoundaryArc]) -> Result<(usize, Vec<usize>)> {
        let seg = self.segs.remove(&key(a, b)).ok_or_else(|| Error::InvalidMesh(format!("no segment {a}-{b}")))?;
        let (t1, i1) = self
            .find_edge(seg.from, seg.to)
            .ok_or_else(|| Error::InvalidMesh("segment missing from triangulation".into()))?;
        let t2 = self.tris[t1].n[i1];
        let frac = (s - seg.s_from) / (seg.s_to - seg.s_from);
        let pf = self.pts[seg.from];
        let pt = self.pts[seg.to];
        let chord = pf.lerp(pt, frac);
        let seeds: Vec<usize> = if t2 == NONE { vec![] } else { vec![t2] };
        let (vid, created) = match self.insert_with(chord, t1, &seeds) {
            Ok(r) => r,
            Err(e) => {
                self.segs.insert(key(seg.from, seg.to), seg);
                return Err(e);
            }
        };
        self.add_segment(Segment { from: seg.from, to: vid, arc: seg.arc, s_from: seg.s_from, s_to: s });
        self.add_segment(Segment { from: vid, to: seg.to, arc: seg.arc, s_from: s, s_to: seg.s_to });
        for &t in &created {
            self.fix_flag(t);
        }
        let target = arcs[seg.arc].point(s);
        if target != chord {
            let around = self.incident(vid);
            let ok = around.iter().all(|&t| {
                let v = self.tris[t].v;
                let q = |x: usize| if x == vid { target } else { self.pts[x] };
                robust::orient2d(c(q(v[0])), c(q(v[1])), c(q(v[2]))) > 0.0
            });
            if !ok {
                return Err(Error::InvalidMesh(format!(
                    "curved boundary too coarse near ({:.4}, {:.4}); reduce the mesh size",
                    target.x, target.y
                )));
            }
            self.pts[vid] = target;
        }
        Ok((vid, created))
    }

    /// Labels triangles inside the domain by flood fill from the left side
    /// of every segment.
    pub fn label_inside(&mut self) -> Result<()> {
        for t in self.tris.iter_mut() {
            t.inside = false;
        }
        let mut queue = VecDeque::new();
        let segs: Vec<Segment> = self.segs.values().copied().collect();
        for s in segs {
            let (t, i) =
                self.find_edge(s.from, s.to).ok_or_else(|| Error::InvalidMesh("boundary segment lost".into()))?;
            let (a, _) = self.edge(t, i);
            let left = if a == s.from { t } else { self.tris[t].n[i] };
            if left == NONE {
                return Err(Error::InvalidMesh("segment on the hull".into()));
            }
            if !self.tris[left].inside {
                self.tris[left].inside = true;
                queue.push_back(left);
            }
        }
        while let Some(t) = queue.pop_front() {
            if self.tris[t].v.iter().any(|&v| v < 3) {
                return Err(Error::InvalidMesh("domain interior leaks through the boundary".into()));
            }
            for i in 0..3 {
                let (a, b) = self.edge(t, i);
                if self.is_segment(a, b) {
                    continue;
                }
                let nb = self.tris[t].n[i];
                if nb != NONE && !self.tris[nb].inside {
                    self.tris[nb].inside = true;
                    queue.push_back(nb);
                }
            }
        }
        Ok(())
    }

    fn split_param(&self, seg: &Segment, acute: &[(usize, f64)]) -> f64 {
        let len = self.pts[seg.from].dist(self.pts[seg.to]);
        for &(apex, base) in acute {
            if seg.from == apex || seg.to == apex {
                // concentric shells: power-of-two radius in [L/3, 2L/3]
                let k = ((2.0 * len / 3.0) / base).log2().floor();
                let d = base * 2f64.powf(k);
                let frac = (d / len).clamp(1.0 / 3.0, 2.0 / 3.0);
                let frac = if seg.from == apex { frac } else { 1.0 - frac };
                return seg.s_from + frac * (seg.s_to - seg.s_from);
            }
        }
        0.5 * (seg.s_from + seg.s_to)
    }

    fn tri_points(&self, t: usize) -> [Point; 3] {
        let v = self.tris[t].v;
        [self.pts[v[0]], self.pts[v[1]], self.pts[v[2]]]
    }

    fn needs_split(&self, t: usize, prm: &RefineParams) -> bool {
        let [a, b, cc] = self.tri_points(t);
        let e = [b.dist(cc), cc.dist(a), a.dist(b)];
        let lmax = e[0].max(e[1]).max(e[2]);
        let lmin = e[0].min(e[1]).min(e[2]);
        let centroid = Point::new((a.x + b.x + cc.x) / 3.0, (a.y + b.y + cc.y) / 3.0);
        if lmax > prm.size_factor * (prm.size)(centroid) {
            return true;
        }
        let area2 = (b - a).cross(cc - a).abs();
        let circ_r = e[0] * e[1] * e[2] / (2.0 * area2);
        if circ_r / lmin <= prm.quality_bound {
            return false;
        }
        // angles pinned by a small input angle cannot be improved
        let v = self.tris[t].v;
        for &(apex, _) in &prm.acute {
            if let Some(ia) = v.iter().position(|&x| x == apex) {
                if self.on_boundary[v[(ia + 1) % 3]] && self.on_boundary[v[(ia + 2) % 3]] {
                    return false;
                }
            }
        }
        // skinny triangle spanning between two boundary nodes of a thin
        // wedge: its short edge joins two boundary points equidistant from an
        // acute apex
        let (i_short, _) = e.iter().enumerate().fold((0, f64::INFINITY), |m, (i, &x)| if x < m.1 { (i, x) } else { m });
        let (p, q) = (v[(i_short + 1) % 3], v[(i_short + 2) % 3]);
        if self.on_boundary[p] && self.on_boundary[q] {
            for &(apex, _) in &prm.acute {
                let dp = self.pts[p].dist(self.pts[apex]);
                let dq = self.pts[q].dist(self.pts[apex]);
                if (dp - dq).abs() <= 1e-9 * dp.max(dq) {
                    return false;
                }
            }
        }
        true
    }

    fn encroached_in_cavity(&mut self, p: Point, t0: usize) -> Result<Vec<(usize, usize)>> {
        let (cav, _) = self.cavity(p, t0, &[])?;
        let mut hits = Vec::new();
        for &t in &cav {
            for i in 0..3 {
                let (a, b) = self.edge(t, i);
                if self.is_segment(a, b) && (self.pts[a] - p).dot(self.pts[b] - p) < 0.0 {
                    let k = key(a, b);
                    if !hits.contains(&k) {
                        hits.push(k);
                    }
                }
            }
        }
        Ok(hits)
    }

    fn split_and_queue(&mut self, a: usize, b: usize, prm: &RefineParams, queue: &mut VecDeque<usize>) -> Result<bool> {
        let Some(seg) = self.segs.get(&key(a, b)).copied() else { return Ok(false) };
        let len = self.pts[a].dist(self.pts[b]);
        let h = (prm.size)(self.pts[a].midpoint(self.pts[b]));
        if len < 1e-9 * h.max(1e-300) {
            return Ok(false);
        }
        let s = self.split_param(&seg, &prm.acute);
        let (_, created) = self.split_segment(a, b, s, prm.arcs)?;
        queue.extend(created);
        Ok(true)
    }

    /// Refines until every inside triangle meets the size and quality
    /// targets.
    pub fn refine(&mut self, prm: &RefineParams) -> Result<()> {
        let mut queue: VecDeque<usize> =
            (0..self.tris.len()).filter(|&t| self.tris[t].alive && self.tris[t].inside).collect();
        let mut steps = 0usize;
        let max_steps = 40 * prm.node_cap + 10_000;
        while let Some(t) = queue.pop_front() {
            if !self.tris[t].alive || !self.tris[t].inside {
                continue;
            }
            steps += 1;
            if steps > max_steps {
                return Err(Error::InvalidMesh("refinement did not terminate".into()));
            }
            if self.num_points() > prm.node_cap {
                return Err(Error::BudgetExceeded { nodes: self.num_points(), cap: prm.node_cap });
            }
            if !self.needs_split(t, prm) {
                continue;
            }
            let [a, b, cc] = self.tri_points(t);
            let center = circumcenter(a, b, cc);
            match self.locate(center, t, true) {
                Located::Blocked(x, y) => {
                    if self.split_and_queue(x, y, prm, &mut queue)? {
                        queue.push_back(t);
                    }
                }
                Located::Vertex(_) => {}
                Located::Inside(tc) => {
                    if !self.tris[tc].inside {
                        continue;
                    }
                    let hits = self.encroached_in_cavity(center, tc)?;
                    if hits.is_empty() {
                        let (_, created) = self.insert_with(center, tc, &[])?;
                        queue.extend(created);
                    } else {
                        let mut any = false;
                        for (x, y) in hits {
                            any |= self.split_and_queue(x, y, prm, &mut queue)?;
                        }
                        if any {
                            queue.push_back(t);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Inside triangles as vertex triples (ids include the three bounding
    /// vertices, which never appear in inside triangles).
    pub fn inside_triangles(&self) -> Vec<[usize; 3]> {
        self.tris.iter().filter(|t| t.alive && t.inside).map(|t| t.v).collect()
    }

    pub fn points(&self) -> &[Point] {
        &self.pts
    }
}
