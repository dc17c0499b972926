use std::collections::VecDeque;

use super::bernoulli::BernoulliField;
use crate::error::{param, Error, Result};
use crate::lattice::{l1_sphere, LatticeBox};

/// l1 distance from `x` to the nearest site `y` with `field(k, y) = 0`,
/// scanning shells of radius `0..=search_cap`, and the lexicographically
/// smallest such site.
pub fn nearest_open_distance(
    field: &BernoulliField,
    k: u32,
    x: &[i64],
    search_cap: u64,
) -> Result<(u64, Vec<i64>)> {
    if search_cap == 0 {
        return param("search cap must be at least 1");
    }
    let mut y = x.to_vec();
    for r in 0..=search_cap {
        // shell offsets come in lexicographic order, hence so do the sites
        for off in l1_sphere(x.len(), r) {
            for i in 0..x.len() {
                y[i] = x[i] + off[i];
            }
            if field.eval(k, &y)? == 0 {
                return Ok((r, y));
            }
        }
    }
    Err(Error::Saturated { k, site: x.to_vec(), cap: search_cap })
}

/// Distances to the nearest open site for every site of `window` on slice
/// `k`, in flat-index order.
///
/// A breadth-first search from the open sites of `window` grown by `margin`
/// gives exact distances up to `margin`; sites farther than that fall back
/// to [`nearest_open_distance`] with `search_cap`.
pub fn open_distance_map(
    field: &BernoulliField,
    k: u32,
    window: &LatticeBox,
    margin: u64,
    search_cap: u64,
) -> Result<Vec<u64>> {
    let outer = window.grow(margin as i64);
    let open = field.open_sites(k, &outer)?;
    let d = outer.dim();
    let mut dist = vec![u64::MAX; outer.len()];
    let mut queue = VecDeque::with_capacity(open.len());
    for &i in &open {
        dist[i] = 0;
        queue.push_back(i);
    }
    // flat-index strides of the row-major layout
    let mut stride = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * outer.extent(i + 1);
    }
    let mut c = vec![0i64; d];
    while let Some(i) = queue.pop_front() {
        let next = dist[i] + 1;
        if next > margin {
            continue;
        }
        outer.coords_of(i, &mut c);
        for axis in 0..d {
            if c[axis] > outer.lo[axis] && dist[i - stride[axis]] == u64::MAX {
                dist[i - stride[axis]] = next;
                queue.push_back(i - stride[axis]);
            }
            if c[axis] < outer.hi[axis] && dist[i + stride[axis]] == u64::MAX {
                dist[i + stride[axis]] = next;
                queue.push_back(i + stride[axis]);
            }
        }
    }
    let mut x = vec![0i64; d];
    (0..window.len())
        .map(|idx| {
            window.coords_of(idx, &mut x);
            let v = dist[outer.index_of(&x)];
            if v <= margin {
                Ok(v)
            } else {
                nearest_open_distance(field, k, &x, search_cap).map(|(r, _)| r)
            }
        })
        .collect()
}
