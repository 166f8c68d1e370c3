# High-precision coefficient cascade, numerical saddlepoint and Feller moments.
import mpmath as mp
mp.mp.dps = 60

class P:
    def __init__(s, kappa, theta, xi, rho, v):
        s.kappa, s.theta, s.xi, s.rho, s.v = map(mp.mpf, (kappa, theta, xi, rho, v))

def beta(p, t): return p.xi**2*(1-mp.e**(-p.kappa*t))/(4*p.kappa)

def AB(p, u, tau):
    # even form: C=cosh(d tau/2), S=sinh(d tau/2)/d
    b = p.kappa - p.rho*p.xi*u
    y = b**2 + u*(1-u)*p.xi**2
    d = mp.sqrt(y)
    if abs(d) < mp.mpf('1e-40'):
        C = 1; S = tau/2
    else:
        C = mp.cosh(d*tau/2); S = mp.sinh(d*tau/2)/d
    g = C + b*S
    A = p.kappa*p.theta/p.xi**2*(b*tau - 2*mp.log(g))
    B = u*(u-1)*S/g
    return A, B

def lam(p, t, tau, u, a):
    w = u/a
    A, B = AB(p, w, tau)
    bt = beta(p, t)
    x = 1-2*bt*B
    return a*(A + p.v*mp.e**(-p.kappa*t)*B/x - 2*p.kappa*p.theta/p.xi**2*mp.log(x))

def dlam(p,t,tau,u,a):
    return mp.diff(lambda uu: lam(p,t,tau,uu,a), u)

def saddle(p,t,tau,k, guess):
    a = mp.sqrt(tau)
    return mp.findroot(lambda u: dlam(p,t,tau,u,a)-k, guess)

def coeffs(p,k,t):
    k = mp.mpf(k); t = mp.mpf(t)
    kap,th,xi,rho,v = p.kappa,p.theta,p.xi,p.rho,p.v
    bt = beta(p,t)
    sg = 1 if k>=0 else -1
    B1 = lambda u: u/4*(u**2*rho*xi-2)
    B1p = lambda u: (3*u**2*rho*xi-2)/4
    a0 = sg/mp.sqrt(bt)
    a1 = -a0*mp.sqrt(v)*mp.e**(-kap*t/2)/(2*mp.sqrt(abs(k))*bt**mp.mpf(0.25))
    a2 = -kap*th/(k*xi**2) - B1(a0)/a0
    E = mp.e**(kap*t)
    a3 = 2*bt*a1**3/(xi**4*v**2)*( xi**2*v*bt*E*(abs(k)*xi**2*mp.sqrt(bt)*B1(a0) - k*xi**2*B1p(a0) - kap*th) + (2*kap*th*bt*E)**2 - xi**4*v**2/16)
    e0 = -2*a1/a0
    zeta = 2*mp.sqrt(v)*mp.e**(-kap*t/2)/e0**mp.mpf(1.5)
    r = a1**2/2 - kap*th/(abs(k)*xi**2*mp.sqrt(bt))
    e1 = -2*bt*r
    e2 = -2*bt*(a1*a2+a0*a3+a1*B1p(a0))
    ve = v*mp.e**(-kap*t)
    psi0 = a0*ve/e0**3*(e0**2 + a0*bt*(3*a1*e0-2*a0*e1))
    psi1 = -4*a0*v*bt*mp.e**(-kap*t)/e0**4
    psi2 = ve/(2*e0**4)*(4*a0*bt*(3*a0*e1-4*a1*e0)-5*e0**2)
    psi3 = 8*v*bt*mp.e**(-kap*t)/e0**5
    psi4 = ve/(2*e0**3)*((e1**2-e0*e2)/bt - 2*a0*a1*e0*e1 + 2*e0**2*r)
    K = 4*kap*th*bt/xi**2
    phi2a = psi2 - psi0**2/2 - K*(2*kap*th+xi**2)/(e0**2*xi**2) - K*a0*psi0/e0
    phi2b = psi3 - psi0*psi1 - K*a0*psi1/e0
    phi2c = -psi1**2/2
    z1 = psi4 - a3*k - 2*kap*th/xi**2*e1/e0
    p1 = e0 + phi2a/zeta**2 + 3*phi2b/zeta**4 + 15*phi2c/zeta**6
    c0 = 2*abs(a1*k)
    c1 = ve/e0*(a0*a1 - e1/(2*bt*e0)) - a2*k
    c2 = e0**(-2*kap*th/xi**2)
    c3 = z1+p1
    return dict(bt=bt,a0=a0,a1=a1,a2=a2,a3=a3,e0=e0,e1=e1,e2=e2,zeta=zeta,r=r,psi0=psi0,psi1=psi1,psi2=psi2,psi3=psi3,psi4=psi4,
                phi2a=phi2a,phi2b=phi2b,phi2c=phi2c,z1=z1,p1=p1,c0=c0,c1=c1,c2=c2,c3=c3, K=K)


def smile(p, k, t):
    c = coeffs(p, k, t)
    k = mp.mpf(k); bt = c['bt']
    v0 = mp.sqrt(bt)*abs(k)/2
    v1 = mp.e**(-p.kappa*t/2)*bt**mp.mpf(0.25)*mp.sqrt(p.v*abs(k))/2
    v2 = 2*v0**2/k**2*(c['c1'] + mp.log(c['c2']*bt*k**2/(c['zeta']*v0**mp.mpf(1.5)))) + v0**2/k + v1**2/v0
    v3 = v0/k**2*(2*c['c3']*v0 - 3*v1) + v1/v0*(2*v2 - v1**2/v0)
    return v0, v1, v2, v3

def moment(p, t, q):
    t = mp.mpf(t); q = mp.mpf(q)
    s = 2*p.kappa*p.theta/p.xi**2
    bt = beta(p, t)
    z = p.v*mp.e**(-p.kappa*t)/(2*bt)
    return (2*bt)**q*mp.e**(-z)*mp.gamma(s+q)/mp.gamma(s)*mp.hyp1f1(s+q, s, z)

def moment_quad(p, t, q):
    # direct integral against the noncentral chi-square transition density
    t = mp.mpf(t)
    bt = beta(p, t)
    c = 1/(2*bt)
    s = 2*p.kappa*p.theta/p.xi**2
    u = c*p.v*mp.e**(-p.kappa*t)
    qq = s - 1
    dens = lambda x: c*mp.e**(-u - c*x)*(c*x/u)**(qq/2)*mp.besseli(qq, 2*mp.sqrt(u*c*x))
    return mp.quad(lambda x: x**q*dens(x), [0, p.theta/4, p.theta, 4*p.theta, 20*p.theta, mp.inf])

if __name__ == '__main__':
    sec5 = P(1, 0.07, 0.52, -0.8, 0.07)
    for k in ['0.2', '-0.15']:
        c = coeffs(sec5, mp.mpf(k), 1)
        print('k', k, {n: mp.nstr(c[n], 17) for n in ['a0','a1','a2','a3','e0','e1','e2','zeta','c0','c1','c2','c3','z1','p1','psi0','psi1','phi2a','phi2b','phi2c']})
        tau = mp.mpf('1e-3')
        us = saddle(sec5, 1, tau, mp.mpf(k), c['a0'] + c['a1']*tau**0.25)
        a = mp.sqrt(tau)
        print('  u*(1e-3)', mp.nstr(us, 17), 'log prefactor', mp.nstr((-mp.mpf(k)*us + lam(sec5, 1, tau, us, a))/a, 17))
    fe = P(1, 0.07, mp.sqrt(mp.mpf('0.28')), -0.8, 0.07)
    for k in ['0.2', '-0.3']:
        print('feller smile k', k, [mp.nstr(x, 17) for x in smile(fe, mp.mpf(k), 1)])
    fig3 = P(1, 0.07, 0.4, -0.6, 0.07)
    for t in ['0.25', '1', '2']:
        print('fig3 t', t, 'D(1/2)', mp.nstr(moment(fig3, t, 0.5), 17), mp.nstr(moment_quad(fig3, t, 0.5), 17),
              'D(-1/2)', mp.nstr(moment(fig3, t, -0.5), 17), mp.nstr(moment_quad(fig3, t, -0.5), 17))
