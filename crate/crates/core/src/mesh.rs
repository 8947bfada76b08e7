//! Local tensor-product meshes of the space-time cylinder `[0, T] x [0, 1]`.
//!
//! Every element is a Cartesian cell `[t_lo, t_hi) x [x_lo, x_hi]` with its own
//! time step and panel. Refinement splits a cell into four by bisecting both
//! directions; the basis is fully discontinuous, so a flat list of cells is
//! all the structure that is needed.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

/// One-based element identifier. The id of an element equals its slot in the
/// mesh plus one, which keeps ids stable for unrefined elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub usize);

impl ElementId {
    pub fn slot(self) -> usize {
        self.0 - 1
    }

    pub fn from_slot(slot: usize) -> Self {
        ElementId(slot + 1)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single cell `I_j x Gamma_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeElement {
    pub id: ElementId,
    pub t_lo: f64,
    pub t_hi: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub level: u32,
}

impl SpaceTimeElement {
    pub fn dt(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    pub fn dx(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn area(&self) -> f64 {
        self.dt() * self.dx()
    }

    /// Same cell geometry, ignoring ids and levels.
    pub fn same_cell(&self, other: &SpaceTimeElement) -> bool {
        self.t_lo.to_bits() == other.t_lo.to_bits()
            && self.t_hi.to_bits() == other.t_hi.to_bits()
            && self.x_lo.to_bits() == other.x_lo.to_bits()
            && self.x_hi.to_bits() == other.x_hi.to_bits()
    }

    fn overlaps_interior(&self, other: &SpaceTimeElement) -> bool {
        self.t_lo < other.t_hi
            && other.t_lo < self.t_hi
            && self.x_lo < other.x_hi
            && other.x_lo < self.x_hi
    }

    /// The four quarter cells, ordered time-major then space:
    /// `(lo, lo), (lo, hi), (hi, lo), (hi, hi)` in `(t, x)`.
    fn quarters(&self) -> [(f64, f64, f64, f64); 4] {
        let tm = self.t_lo + (self.t_hi - self.t_lo) / 2.0;
        let xm = self.x_lo + (self.x_hi - self.x_lo) / 2.0;
        [
            (self.t_lo, tm, self.x_lo, xm),
            (self.t_lo, tm, xm, self.x_hi),
            (tm, self.t_hi, self.x_lo, xm),
            (tm, self.t_hi, xm, self.x_hi),
        ]
    }
}

/// Record of one split: the retained slot and the three appended ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub parent: ElementId,
    pub appended: [ElementId; 3],
}

/// Parent to children bookkeeping produced by [`SpaceTimeMesh::refine`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefinementMap {
    pub splits: Vec<Split>,
}

impl RefinementMap {
    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    /// Ids whose cell changed or is new: retained slots and appended children.
    pub fn touched(&self) -> BTreeSet<ElementId> {
        self.splits
            .iter()
            .flat_map(|s| std::iter::once(s.parent).chain(s.appended))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeMesh {
    elements: Vec<SpaceTimeElement>,
    final_time: f64,
    generation: u64,
    /// `Some((n_x, n_t))` while the mesh is still the global tensor product it
    /// was built as.
    uniform: Option<(usize, usize)>,
}

impl SpaceTimeMesh {
    /// Global tensor-product mesh with `n_x * n_t` cells. Element
    /// `(n - 1) * n_x + i` occupies time slab `n` and panel `i`.
    pub fn uniform(n_x: usize, n_t: usize, final_time: f64) -> Result<Self> {
        if n_x == 0 || n_t == 0 {
            return Err(Error::InvalidArgument(format!(
                "uniform mesh needs positive counts, got n_x = {n_x}, n_t = {n_t}"
            )));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        let mut elements = Vec::with_capacity(n_x * n_t);
        for n in 0..n_t {
            let t_lo = n as f64 * final_time / n_t as f64;
            let t_hi = (n + 1) as f64 * final_time / n_t as f64;
            for i in 0..n_x {
                elements.push(SpaceTimeElement {
                    id: ElementId::from_slot(elements.len()),
                    t_lo,
                    t_hi,
                    x_lo: i as f64 / n_x as f64,
                    x_hi: (i + 1) as f64 / n_x as f64,
                    level: 0,
                });
            }
        }
        Ok(Self {
            elements,
            final_time,
            generation: 0,
            uniform: Some((n_x, n_t)),
        })
    }

    pub fn elements(&self) -> &[SpaceTimeElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// `(n_x, n_t)` if the mesh is an unrefined global tensor product.
    pub fn uniform_shape(&self) -> Option<(usize, usize)> {
        self.uniform
    }

    pub fn get(&self, id: ElementId) -> Result<&SpaceTimeElement> {
        if id.0 == 0 {
            return Err(Error::UnknownElement(id));
        }
        self.elements.get(id.slot()).ok_or(Error::UnknownElement(id))
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(SpaceTimeElement::area).sum()
    }

    /// Split each marked element into four. The quarter containing the
    /// parent's `(t_lo, x_lo)` corner keeps the parent's slot; the other three
    /// are appended in time-major order, parents processed by increasing id.
    pub fn refine(&self, marked: &BTreeSet<ElementId>) -> Result<(SpaceTimeMesh, RefinementMap)> {
        for &id in marked {
            self.get(id)?;
        }
        if marked.is_empty() {
            return Ok((self.clone(), RefinementMap::default()));
        }
        let mut elements = self.elements.clone();
        let mut splits = Vec::with_capacity(marked.len());
        for &id in marked {
            let parent = self.elements[id.slot()];
            let quarters = parent.quarters();
            let level = parent.level + 1;
            let make = |id: ElementId, (t_lo, t_hi, x_lo, x_hi): (f64, f64, f64, f64)| {
                SpaceTimeElement {
                    id,
                    t_lo,
                    t_hi,
                    x_lo,
                    x_hi,
                    level,
                }
            };
            elements[id.slot()] = make(id, quarters[0]);
            let mut appended = [ElementId(0); 3];
            for (k, q) in quarters[1..].iter().enumerate() {
                let child = ElementId::from_slot(elements.len());
                elements.push(make(child, *q));
                appended[k] = child;
            }
            splits.push(Split {
                parent: id,
                appended,
            });
        }
        Ok((
            SpaceTimeMesh {
                elements,
                final_time: self.final_time,
                generation: self.generation + 1,
                uniform: None,
            },
            RefinementMap { splits },
        ))
    }

    /// Pairwise interior-overlap check. Sweeps over elements sorted by `t_lo`.
    pub fn find_overlap(&self) -> Option<(ElementId, ElementId)> {
        let mut order: Vec<&SpaceTimeElement> = self.elements.iter().collect();
        order.sort_by(|a, b| a.t_lo.total_cmp(&b.t_lo));
        for (k, a) in order.iter().enumerate() {
            for b in &order[k + 1..] {
                if b.t_lo >= a.t_hi {
                    break;
                }
                if a.overlaps_interior(b) {
                    return Some((a.id, b.id));
                }
            }
        }
        None
    }

    /// Comma-separated export: `id,level,t_lo,t_hi,x_lo,x_hi`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "id,level,t_lo,t_hi,x_lo,x_hi")?;
        for e in &self.elements {
            writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
                e.id, e.level, e.t_lo, e.t_hi, e.x_lo, e.x_hi
            )?;
        }
        Ok(())
    }

    /// Vector-graphics picture of the cells: space runs horizontally, time
    /// upwards.
    pub fn write_svg<W: Write>(&self, mut out: W) -> Result<()> {
        let size = 600.0;
        let margin = 20.0;
        let sx = size;
        let st = size / self.final_time;
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = size + 2.0 * margin,
            h = size + 2.0 * margin
        )?;
        writeln!(out, r#"<g fill="none" stroke="black" stroke-width="0.5">"#)?;
        for e in &self.elements {
            let x = margin + e.x_lo * sx;
            let y = margin + (self.final_time - e.t_hi) * st;
            writeln!(
                out,
                r#"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}"/>"#,
                x,
                y,
                e.dx() * sx,
                e.dt() * st
            )?;
        }
        writeln!(out, "</g>\n</svg>")?;
        Ok(())
    }
}
